"""Lawlor necks: the special Lagrangian cylinders asymptotic to a pair of planes.

For a in R^n_{>0} the neck is parametrised by (lam, mu) in R x S^{n-1} as

    z^k = mu^k r_k(lam) exp(i phi_k(lam)),   r_k = sqrt(1/a_k + lam^2),
    phi_k = (pi/2) [k = 1] + theta_k(a, lam),
    theta_k(a, lam) = -int_0^lam ds / ((1/a_k + s^2) sqrt(P(a, s))),

with P(a, s) = (prod_k (1 + a_k s^2) - 1) / s^2.  Each end is a graph over one
of the two asymptotic planes of the gradient of a decaying function g.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (DimensionMismatch, InfeasibleTargets, NoConvergence,
                     QuadratureNonConvergence, RadiusTooSmall)
from .quadrature import HalfLineIntegral, adaptive_quad
from .symplectic import real_matrix

DEFAULT_TOL = 1e-13


def elementary_symmetric(a: np.ndarray) -> np.ndarray:
    """e_1..e_n of the entries of a."""
    e = np.zeros(len(a) + 1)
    e[0] = 1.0
    for ak in a:
        e[1:] = e[1:] + ak * e[:-1]
    return e[1:]


def poly_P(a, lam) -> np.ndarray:
    """P(a, lam) evaluated as sum_j e_j(a) lam^{2(j-1)}, free of cancellation."""
    e = elementary_symmetric(np.asarray(a, dtype=float))
    u = np.asarray(lam, dtype=float) ** 2
    out = np.full(u.shape, e[-1])
    for c in e[-2::-1]:
        out = out * u + c
    return out


def _check_a(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or len(a) < 2:
        raise DimensionMismatch("a must be a vector of length n >= 2")
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise ValueError("a must have positive finite entries")
    return a


def sphere_frame(mu: np.ndarray) -> np.ndarray:
    """Orthonormal tangent frames of S^{n-1}: (..., n-1, n) with det[mu, v] = +1."""
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[-1]
    eye = np.broadcast_to(np.eye(n), mu.shape[:-1] + (n, n))
    M = np.concatenate([mu[..., :, None], eye], axis=-1)
    Q = np.linalg.qr(M)[0]
    s = np.sign(np.sum(Q[..., :, 0] * mu, axis=-1))
    Q = Q * np.where(np.arange(n) == 0, s[..., None], 1.0)[..., None, :]
    d = np.sign(np.linalg.det(Q))
    Q[..., :, -1] *= d[..., None]
    return np.swapaxes(Q[..., :, 1:], -1, -2)


@dataclass
class LawlorNeck:
    """Tabulated Lawlor neck for a fixed parameter vector a."""

    a: np.ndarray
    tol: float = DEFAULT_TOL
    table: dict | None = field(default=None, repr=False)
    _F: HalfLineIntegral = field(init=False, repr=False)

    def __post_init__(self):
        self.a = _check_a(self.a)
        a = self.a
        L = 2.0 / np.sqrt(a.min())
        h = 0.25 / np.sqrt(a.max())
        # components 0..n-1: theta integrands; component n: 1/sqrt(P)
        self._F = HalfLineIntegral(self._integrands, L=L, h=h, tol=self.tol, state=self.table)
        self.table = self._F.state()
        if self._F.error > 10 * self.tol * (1 + len(a)):
            raise QuadratureNonConvergence(f"neck tabulation error {self._F.error:.2e}")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def A(self) -> float:
        return float(self.a.min())

    @property
    def R0(self) -> float:
        """Radius beyond which each end is graphical over its plane."""
        return float(np.sqrt(2.0 / self.A))

    def _integrands(self, s):
        s = np.asarray(s, dtype=float)
        sq = np.sqrt(poly_P(self.a, s))[..., None]
        th = 1.0 / ((1.0 / self.a + s[..., None] ** 2) * sq)
        return np.concatenate([th, 1.0 / sq], axis=-1)

    # --- angle functions -------------------------------------------------

    @property
    def theta_inf(self) -> np.ndarray:
        """theta_k(a) = lim theta_k(a, lam) as lam -> +inf (all negative)."""
        return -self._F.total[: self.n]

    def theta(self, lam) -> np.ndarray:
        """theta_k(a, lam), shape lam.shape + (n,); odd in lam."""
        return -self._F(lam)[..., : self.n]

    def dtheta(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return -self._integrands(lam)[..., : self.n]

    def tails(self, lam) -> np.ndarray:
        """int_|lam|^inf of every integrand, computed without cancellation."""
        lam = np.abs(np.asarray(lam, dtype=float))
        out = np.empty(lam.shape + (self.n + 1,))
        far = lam >= self._F.L
        if np.any(far):
            out[far] = self._F.tail(lam[far])
        if np.any(~far):
            out[~far] = self._F.total - self._F(lam[~far])
        return out

    def delta(self, lam) -> np.ndarray:
        """theta_k(a, lam) - theta_k(a) for lam > 0 (positive, ~ lam^-n)."""
        return self.tails(lam)[..., : self.n]

    def tail_bound(self, lam) -> np.ndarray:
        """Upper bound on |theta_k(a, lam) - theta_k(a)|."""
        lam = np.asarray(lam, dtype=float)
        return 1.0 / (self.n * np.sqrt(self.A) ** self.n * lam ** self.n)

    def plane_angles(self) -> np.ndarray:
        """Per-line angles between the two asymptotic planes: -2 theta_k(a)."""
        return -2.0 * self.theta_inf

    # --- embedding ------------------------------------------------------

    def _phases(self, lam) -> tuple[np.ndarray, np.ndarray]:
        lam = np.asarray(lam, dtype=float)
        r = np.sqrt(1.0 / self.a + lam[..., None] ** 2)
        phi = self.theta(lam)
        phi[..., 0] += 0.5 * np.pi
        return r, phi

    def embed_complex(self, lam, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if mu.shape[-1] != self.n:
            raise DimensionMismatch(f"mu has {mu.shape[-1]} entries, expected {self.n}")
        r, phi = self._phases(lam)
        return mu * r * np.exp(1j * phi)

    def embed(self, lam, mu) -> np.ndarray:
        """Real point (x, y) in R^{2n}."""
        z = self.embed_complex(lam, mu)
        return np.concatenate([z.real, z.imag], axis=-1)

    def tangents_complex(self, lam, mu, frame=None) -> np.ndarray:
        """Complex tangent matrix (..., n, n): column 0 is d/dlam, then d/dv_j.

        ``frame`` is an (..., n-1, n) orthonormal tangent frame at mu
        (defaults to :func:`sphere_frame`).
        """
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if frame is None:
            frame = sphere_frame(mu)
        r, phi = self._phases(lam)
        e = np.exp(1j * phi)
        dth = self.dtheta(lam)
        dl = mu * e * (lam[..., None] / r + 1j * r * dth)
        dv = frame * (r * e)[..., None, :]
        return np.concatenate([dl[..., None, :], dv], axis=-2).swapaxes(-1, -2)

    def tangents(self, lam, mu, frame=None) -> np.ndarray:
        """Real tangent matrix (..., 2n, n)."""
        return real_matrix(self.tangents_complex(lam, mu, frame))

    def induced_metric(self, lam, mu, frame=None) -> np.ndarray:
        """Closed-form induced metric in the (d lam, frame) basis."""
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if frame is None:
            frame = sphere_frame(mu)
        r2 = 1.0 / self.a + lam[..., None] ** 2
        gll = np.sum(mu ** 2 / r2, axis=-1) * (lam ** 2 + 1.0 / poly_P(self.a, lam))
        gvv = np.einsum("...ik,...k,...jk->...ij", frame, r2, frame)
        n = self.n
        g = np.zeros(lam.shape + (n, n))
        g[..., 0, 0] = gll
        g[..., 1:, 1:] = gvv
        return g

    def volume_density(self, lam, mu) -> np.ndarray:
        """sqrt(det g) with respect to d lam and the round measure on S^{n-1}."""
        return np.sqrt(np.linalg.det(self.induced_metric(lam, mu)))

    # --- asymptotic planes and graphs -----------------------------------

    def plane_phases(self) -> tuple[np.ndarray, np.ndarray]:
        """Phases of the asymptotic planes of the lam -> +inf and lam -> -inf ends."""
        shift = np.zeros(self.n)
        shift[0] = 0.5 * np.pi
        return shift + self.theta_inf, shift - self.theta_inf

    def asymptotic_planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal (2n, n) bases of the two asymptotic planes."""
        ph1, ph2 = self.plane_phases()
        return real_matrix(np.diag(np.exp(1j * ph1))), real_matrix(np.diag(np.exp(1j * ph2)))

    def graph_coordinates(self, lam, mu) -> tuple[np.ndarray, np.ndarray]:
        """(s, t): coordinates along and normal to the plane of the end containing lam."""
        lam = np.asarray(lam, dtype=float)
        r = np.sqrt(1.0 / self.a + lam[..., None] ** 2)
        d = np.sign(lam)[..., None] * self.delta(lam)
        return mu * r * np.cos(d), mu * r * np.sin(d)

    def solve_lambda(self, s: np.ndarray, max_iter: int = 60,
                     check: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Invert the lam > 0 end: (lam, mu) whose plane coordinate is s."""
        s = np.asarray(s, dtype=float)
        rad = np.linalg.norm(s, axis=-1)
        if check and np.any(rad < self.R0 * (1 - 1e-12)):
            raise RadiusTooSmall(f"|s| = {rad.min():.4g} below R0 = {self.R0:.4g}")
        s2 = s ** 2
        lam = 0.5 * rad
        for _ in range(max_iter):
            r = np.sqrt(1.0 / self.a + lam[..., None] ** 2)
            d = self.delta(lam)
            q = r * np.cos(d)
            dq = lam[..., None] / r * np.cos(d) + r * np.sin(d) * self._integrands(lam)[..., : self.n]
            F = np.sum(s2 / q ** 2, axis=-1) - 1.0
            dF = np.sum(-2.0 * s2 * dq / q ** 3, axis=-1)
            step = F / dF
            lam = lam - step
            if np.all(np.abs(step) <= 1e-14 * lam):
                break
        else:
            raise NoConvergence("graph inversion did not converge")
        r = np.sqrt(1.0 / self.a + lam[..., None] ** 2)
        mu = s / (r * np.cos(self.delta(lam)))
        mu /= np.linalg.norm(mu, axis=-1, keepdims=True)
        return lam, mu

    def graph_from_neck(self, lam, mu, frame=None):
        """g, grad g and Hess g at the plane point of (lam, mu), lam > 0."""
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if frame is None:
            frame = sphere_frame(mu)
        r = np.sqrt(1.0 / self.a + lam[..., None] ** 2)
        tl = self.tails(lam)
        d, I = tl[..., : self.n], tl[..., self.n]
        c, sn = np.cos(d), np.sin(d)
        dth = -self._integrands(lam)[..., : self.n]
        g = 0.25 * np.sum(mu ** 2 * r ** 2 * np.sin(2 * d), axis=-1) - 0.5 * I
        t = mu * r * sn
        lr = lam[..., None] / r
        ds_l = mu * (lr * c - r * sn * dth)
        dt_l = mu * (lr * sn + r * c * dth)
        ds_v = frame * (r * c)[..., None, :]
        dt_v = frame * (r * sn)[..., None, :]
        Ds = np.concatenate([ds_l[..., None, :], ds_v], axis=-2).swapaxes(-1, -2)
        Dt = np.concatenate([dt_l[..., None, :], dt_v], axis=-2).swapaxes(-1, -2)
        H = np.linalg.solve(np.swapaxes(Ds, -1, -2), np.swapaxes(Dt, -1, -2))
        H = np.swapaxes(H, -1, -2)
        return g, t, H

    def asymptotic_graph(self, s, check: bool = True):
        """(g, grad g, Hess g) of the lam > 0 end over its plane, at |s| >= R0."""
        lam, mu = self.solve_lambda(s, check=check)
        return self.graph_from_neck(lam, mu)

    def graph_hessian3(self, s, rel_step: float = 1e-4) -> np.ndarray:
        """Third derivatives of g by central differences of the analytic Hessian."""
        s = np.asarray(s, dtype=float)
        if np.any(np.linalg.norm(s, axis=-1) < self.R0 * (1 - 1e-12)):
            raise RadiusTooSmall("third derivatives requested inside R0")
        h = rel_step * np.linalg.norm(s, axis=-1)[..., None, None]
        out = []
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = 1.0
            hp = self.asymptotic_graph(s + h[..., 0] * e, check=False)[2]
            hm = self.asymptotic_graph(s - h[..., 0] * e, check=False)[2]
            out.append((hp - hm) / (2 * h))
        return np.stack(out, axis=-3)


@lru_cache(maxsize=32)
def _neck_cached(a: tuple, tol: float) -> LawlorNeck:
    from .cache import load_table, store_table
    table = load_table(a, tol)
    neck = LawlorNeck(np.array(a), tol=tol, table=table)
    if table is None:
        store_table(a, tol, neck.table)
    return neck


def get_neck(a, tol: float = DEFAULT_TOL) -> LawlorNeck:
    return _neck_cached(tuple(float(x) for x in np.asarray(a, dtype=float)), float(tol))


def theta(a, lam, k: int | None = None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """theta_k(a, lam) for component k (0-based), or all components when k is None."""
    th = get_neck(a, tol).theta(lam)
    return th if k is None else th[..., k]


def theta_infinity(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """theta_k(a) by direct quadrature (no tabulation); used by match_angles."""
    a = _check_a(a)
    L = 2.0 / np.sqrt(a.min())

    def f(s):
        return 1.0 / ((1.0 / a + s[..., None] ** 2) * np.sqrt(poly_P(a, s))[..., None])

    def g(t):
        return f(1.0 / t) / (t * t)[..., None]

    head, _ = adaptive_quad(f, 0.0, L, tol=tol)
    tail, _ = adaptive_quad(g, 0.0, 1.0 / L, tol=tol)
    return -(head + tail)


def embed(a, lam, mu):
    return get_neck(a).embed(lam, mu)


def induced_metric(a, lam, mu):
    return get_neck(a).induced_metric(lam, mu)


@dataclass(frozen=True)
class AsymptoticGraph:
    """Samples of the graphing function of one end of the neck over its plane."""

    plane_index: int
    points: np.ndarray
    g: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    R0: float


def asymptotic_graph(a, end: int, points, tol: float = DEFAULT_TOL) -> AsymptoticGraph:
    """g with its gradient and Hessian at plane points |s| >= R0 of end 1 (lam > 0) or 2.

    The two ends are related by the antipodal symmetry p -> -p, under which
    the graphing function changes sign.
    """
    if end not in (1, 2):
        raise ValueError("end must be 1 or 2")
    neck = get_neck(a, tol)
    pts = np.asarray(points, dtype=float)
    g, t, H = neck.asymptotic_graph(pts)
    sg = 1.0 if end == 1 else -1.0
    return AsymptoticGraph(end, pts, sg * g, sg * t, sg * H, neck.R0)


@dataclass(frozen=True)
class MatchResult:
    a: np.ndarray
    angles: np.ndarray
    iterations: int
    residual: float


def match_angles(targets, tol: float = 1e-11, max_iter: int = 60) -> MatchResult:
    """Find a (normalised so min a_k = 1) whose per-line plane angles are ``targets``.

    ``targets[k]`` is the angle in the k-th complex line; they must lie in
    (0, pi) and sum to pi.  Solved by damped Newton in log a with a
    finite-difference Jacobian, starting from a = (1, ..., 1).
    """
    tg = np.asarray(targets, dtype=float)
    n = len(tg)
    if n < 2:
        raise DimensionMismatch("need at least two angles")
    if np.any(tg <= 0) or np.any(tg >= np.pi) or abs(tg.sum() - np.pi) > 1e-9:
        raise InfeasibleTargets(f"targets {tg} must lie in (0, pi) and sum to pi")

    def resid(y):
        a = np.exp(np.concatenate([[0.0], y]))
        return -2.0 * theta_infinity(a, tol=1e-14)[1:] - tg[1:]

    y = np.zeros(n - 1)
    r = resid(y)
    it = 0
    while np.max(np.abs(r)) > tol:
        if it >= max_iter:
            raise NoConvergence(f"match_angles residual {np.max(np.abs(r)):.2e}")
        h = 1e-6
        Jm = np.empty((n - 1, n - 1))
        for j in range(n - 1):
            e = np.zeros(n - 1)
            e[j] = h
            Jm[:, j] = (resid(y + e) - resid(y - e)) / (2 * h)
        step = np.linalg.solve(Jm, -r)
        t = 1.0
        while True:
            cand = y + t * step
            rc = resid(cand)
            if np.linalg.norm(rc) < np.linalg.norm(r) or t < 1e-4:
                break
            t *= 0.5
        y, r = cand, rc
        it += 1
    a = np.exp(np.concatenate([[0.0], y]))
    a = a / a.min()
    ang = -2.0 * theta_infinity(a, tol=1e-14)
    return MatchResult(a=a, angles=ang, iterations=it, residual=float(np.max(np.abs(ang - tg))))


def measure_C0(neck: LawlorNeck, r_max_factor: float = 50.0, n_radii: int = 24,
               sphere_order: int = 4) -> float:
    """Sampled constant of the decay bounds for the lam > 0 end.

    Largest of |p|^{n-1} (|grad g| + |p| |Hess g| + |p|^2 |D^3 g|) and
    |p|^{n-2} |g| over |p| in [R0, r_max_factor R0].
    """
    from .quadrature import sphere_quadrature

    n = neck.n
    if n == 3:
        pts = sphere_quadrature(3, sphere_order)[0]
    else:
        pts = np.random.default_rng(0).normal(size=(64, n))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    best = 0.0
    for r in np.geomspace(neck.R0, r_max_factor * neck.R0, n_radii):
        s = r * pts
        g, t, H = neck.asymptotic_graph(s)
        H3 = neck.graph_hessian3(s)
        q = r ** (n - 1) * (np.linalg.norm(t, axis=-1)
                            + r * np.linalg.norm(H, ord=2, axis=(-2, -1))
                            + r ** 2 * np.sqrt(np.sum(H3 ** 2, axis=(-3, -2, -1))))
        best = max(best, float(q.max()), float(np.max(r ** (n - 2) * np.abs(g))))
    return best
