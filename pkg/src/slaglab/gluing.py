"""Desingularising two transverse special Lagrangian pieces with a scaled Lawlor neck.

The pieces M_1, M_2 are graphs of gradients of functions f_i over the two
asymptotic planes of the neck, restricted to the unit ball.  For a gluing
parameter alpha the neck is scaled by eps and spliced in on the annulus
delta/2 <= |x| <= delta, where the surface is the graph of the gradient of
(1 - eta) f_i + eta g_eps with g_eps(x) = eps^2 g(x / eps).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (AlphaTooLarge, ChartDomainError, ParameterInconsistency,
                     PlaneMismatch, ResolutionInfeasible)
from .lawlor import LawlorNeck, get_neck, measure_C0
from .symplectic import apply_J, complex_matrix, projector

ALPHA_MIN = 1e-3
DEFAULT_ALPHA_MAX = 0.25


# --- smooth cutoffs ---------------------------------------------------------

def smoothstep(u) -> tuple[np.ndarray, ...]:
    """C-infinity step 0 -> 1 on [0, 1] built from exp(-1/t), with three derivatives.

    Written as a logistic function of q(u) = 1/(1-u) - 1/u.
    """
    u = np.asarray(u, dtype=float)
    S = np.where(u >= 1.0, 1.0, 0.0)
    d1, d2, d3 = (np.zeros_like(u) for _ in range(3))
    m = (u > 0.004) & (u < 0.996)
    if np.any(m):
        v = u[m]
        w = 1.0 - v
        q = 1.0 / w - 1.0 / v
        q1 = 1.0 / w ** 2 + 1.0 / v ** 2
        q2 = 2.0 / w ** 3 - 2.0 / v ** 3
        q3 = 6.0 / w ** 4 + 6.0 / v ** 4
        sg = 0.5 * (1.0 + np.tanh(0.5 * q))
        s1 = sg * (1 - sg)
        s2 = s1 * (1 - 2 * sg)
        s3 = s1 * (1 - 6 * sg + 6 * sg ** 2)
        S[m] = sg
        d1[m] = s1 * q1
        d2[m] = s2 * q1 ** 2 + s1 * q2
        d3[m] = s3 * q1 ** 3 + 3 * s2 * q1 * q2 + s1 * q3
    # outside the numerically active window the step is flat to < 1e-40
    S = np.where((u > 0) & (u <= 0.004), 0.0, S)
    S = np.where((u >= 0.996) & (u < 1), 1.0, S)
    return S, d1, d2, d3


def radial_cutoff(r, delta: float) -> tuple[np.ndarray, ...]:
    """eta(r) = 1 for r <= delta/2, 0 for r >= delta, with r-derivatives 1..3."""
    half = 0.5 * delta
    S, d1, d2, d3 = smoothstep((np.asarray(r, dtype=float) - half) / half)
    return 1.0 - S, -d1 / half, -d2 / half ** 2, -d3 / half ** 3


def cutoff_eta(x: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """eta(|x|) with its Euclidean gradient and Hessian."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r = np.linalg.norm(x, axis=-1)
    e, e1, e2, _ = radial_cutoff(r, delta)
    rs = np.where(r > 0, r, 1.0)
    xh = x / rs[..., None]
    grad = e1[..., None] * xh
    P = xh[..., :, None] * xh[..., None, :]
    hess = e2[..., None, None] * P + (e1 / rs)[..., None, None] * (np.eye(n) - P)
    return e, grad, hess


# --- exterior pieces --------------------------------------------------------

@dataclass(frozen=True)
class ExteriorPiece:
    """Graph function f(x) = c_ijk x^i x^j x^k / 6 over a plane (c = 0 is flat)."""

    cubic: np.ndarray

    @classmethod
    def flat(cls, n: int) -> "ExteriorPiece":
        return cls(np.zeros((n, n, n)))

    @classmethod
    def random_cubic(cls, n: int, scale: float, seed: int = 0) -> "ExteriorPiece":
        c = np.random.default_rng(seed).normal(size=(n, n, n))
        c = sum(np.transpose(c, p) for p in
                [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6.0
        return cls(scale * c / np.max(np.abs(c)))

    @property
    def is_flat(self) -> bool:
        return not np.any(self.cubic)

    def value(self, x):
        return np.einsum("ijk,...i,...j,...k->...", self.cubic, x, x, x) / 6.0

    def grad(self, x):
        return np.einsum("ijk,...j,...k->...i", self.cubic, x, x) / 2.0

    def hess(self, x):
        return np.einsum("ijk,...k->...ij", self.cubic, x)

    def third(self, x):
        return np.broadcast_to(self.cubic, np.shape(x)[:-1] + self.cubic.shape)

    def measured_K(self, samples: int = 400, seed: int = 1) -> float:
        """Smallest K with |f| + d|Df| + d^2|D^2f| + d^3|D^3f| <= K d^3 on B_d, d <= 1."""
        if self.is_flat:
            return 0.0
        n = self.cubic.shape[0]
        rng = np.random.default_rng(seed)
        u = rng.normal(size=(samples, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        # homogeneity: the supremum over B_d scales exactly as d^3
        x = u
        return float(np.abs(self.value(x)).max() + np.linalg.norm(self.grad(x), axis=-1).max()
                     + np.linalg.norm(self.hess(x), ord=2, axis=(-2, -1)).max()
                     + np.sqrt(np.sum(self.cubic ** 2)))


# --- parameters -------------------------------------------------------------

@dataclass(frozen=True)
class GlueParams:
    alpha: float
    K: float
    C0: float
    R0: float
    n: int
    delta: float
    eps: float

    @property
    def neck_outer(self) -> float:
        """Radius in the plane at which the scaled neck becomes graphical."""
        return self.eps * self.R0


def select_parameters(alpha: float, K: float, C0: float, R0: float, n: int,
                    alpha_max: float = DEFAULT_ALPHA_MAX) -> GlueParams:
    """delta = alpha / K and eps at its largest admissible value."""
    if not np.isfinite(alpha) or alpha <= 0:
        raise ParameterInconsistency(f"alpha must be positive, got {alpha}")
    if alpha < ALPHA_MIN:
        raise ResolutionInfeasible(f"alpha = {alpha} below resolvable floor {ALPHA_MIN}")
    if alpha > alpha_max:
        raise AlphaTooLarge(f"alpha = {alpha} exceeds ceiling {alpha_max}")
    if K <= 0 or C0 <= 0:
        raise ParameterInconsistency("K and C0 must be positive")
    delta = alpha / K
    eps = alpha ** (1.0 + 1.0 / n) / (2.0 * K * C0 ** (1.0 / n))
    if eps * R0 > 0.5 * delta:
        raise ParameterInconsistency(
            f"scaled neck radius eps*R0 = {eps * R0:.3g} exceeds delta/2 = {delta / 2:.3g}")
    if delta > 1.0:
        raise ParameterInconsistency(f"delta = {delta:.3g} exceeds the unit exterior radius")
    return GlueParams(alpha=float(alpha), K=float(K), C0=float(C0), R0=float(R0), n=n,
                      delta=float(delta), eps=float(eps))


@lru_cache(maxsize=16)
def _C0_cached(a: tuple) -> float:
    return measure_C0(get_neck(a))


def default_C0(neck: LawlorNeck) -> float:
    return _C0_cached(tuple(float(v) for v in neck.a))


# --- glued surface ----------------------------------------------------------

class GluedSurface:
    """Charts of the desingularised surface M_alpha.

    Sides are labelled 1 (plane of the lam > 0 end) and 2 (lam < 0).  Graph
    charts use coordinates x in the plane; the neck chart uses (lam, mu).
    """

    def __init__(self, neck: LawlorNeck, params: GlueParams,
                 pieces: tuple[ExteriorPiece, ExteriorPiece]):
        self.neck = neck
        self.params = params
        self.pieces = pieces
        B1, B2 = neck.asymptotic_planes()
        self.planes = (B1, B2)
        self.normals = (apply_J(B1), apply_J(B2))
        # orientation signs making dz restricted to each plane equal to +1
        self.signs = tuple(float(np.sign(np.linalg.det(complex_matrix(B)).real))
                           for B in self.planes)

    @property
    def n(self) -> int:
        return self.neck.n

    @property
    def delta(self) -> float:
        return self.params.delta

    @property
    def eps(self) -> float:
        return self.params.eps

    # neck -------------------------------------------------------------------

    def neck_point(self, lam, mu):
        return self.eps * self.neck.embed(lam, mu)

    def neck_tangents_complex(self, lam, mu, frame=None):
        return self.eps * self.neck.tangents_complex(lam, mu, frame)

    def neck_plane_radius(self, lam, mu):
        """|pi_i(p)| for the neck point at (lam, mu), i the side of lam."""
        s, _ = self.neck.graph_coordinates(lam, mu)
        return self.eps * np.linalg.norm(s, axis=-1)

    def lambda_at_radius(self, mu, rad) -> np.ndarray:
        """lam > 0 with eps |s(lam, mu)| = rad (rad >= eps R0)."""
        mu = np.asarray(mu, dtype=float)
        target = np.broadcast_to(np.asarray(rad, dtype=float) / self.eps, mu.shape[:-1])
        lam = 0.5 * target.copy()
        a = self.neck.a
        for _ in range(80):
            r = np.sqrt(1.0 / a + lam[..., None] ** 2)
            d = self.neck.delta(lam)
            q = r * np.cos(d)
            dq = lam[..., None] / r * np.cos(d) + r * np.sin(d) * self.neck._integrands(lam)[..., :self.n]
            F = np.sum(mu ** 2 * q ** 2, axis=-1) - target ** 2
            dF = np.sum(2 * mu ** 2 * q * dq, axis=-1)
            step = F / dF
            lam = lam - step
            if np.all(np.abs(step) <= 1e-14 * lam):
                break
        return lam

    # graph charts -----------------------------------------------------------

    def _check_graph_domain(self, x, rmin, rmax):
        r = np.linalg.norm(x, axis=-1)
        if np.any(r < rmin * (1 - 1e-12)) or np.any(r > rmax * (1 + 1e-12)):
            raise ChartDomainError(
                f"graph chart radius outside [{rmin:.4g}, {rmax:.4g}]: "
                f"[{r.min():.4g}, {r.max():.4g}]")
        return r

    def g_eps(self, side: int, x, lam_mu=False):
        """eps^2 g(x/eps) on the given side, with gradient and Hessian."""
        x = np.asarray(x, dtype=float)
        lam, mu = self.neck.solve_lambda(x / self.eps)
        g, t, H = self.neck.graph_from_neck(lam, mu)
        sgn = 1.0 if side == 1 else -1.0
        out = (sgn * self.eps ** 2 * g, sgn * self.eps * t, sgn * H)
        return out + ((lam, mu),) if lam_mu else out

    def graph_function(self, side: int, x, rmin=None, rmax: float = 1.0):
        """F = (1 - eta) f + eta g_eps with gradient and Hessian at x in the plane."""
        x = np.asarray(x, dtype=float)
        if rmin is None:
            rmin = self.params.neck_outer
        r = self._check_graph_domain(x, rmin, rmax)
        piece = self.pieces[side - 1]
        f, df, hf = piece.value(x), piece.grad(x), piece.hess(x)
        eta, deta, heta = cutoff_eta(x, self.delta)
        F, dF, hF = f.copy(), df.copy(), hf.copy()
        m = eta > 0
        if np.any(m):
            g, dg, hg = self.g_eps(side, x[m])
            e, de, he = eta[m], deta[m], heta[m]
            dd = dg - df[m]
            F[m] = (1 - e) * f[m] + e * g
            dF[m] = (1 - e)[..., None] * df[m] + e[..., None] * dg + (g - f[m])[..., None] * de
            hF[m] = ((1 - e)[..., None, None] * hf[m] + e[..., None, None] * hg
                     + de[..., :, None] * dd[..., None, :] + dd[..., :, None] * de[..., None, :]
                     + (g - f[m])[..., None, None] * he)
        return F, dF, hF

    def graph_point(self, side: int, x, dF=None):
        x = np.asarray(x, dtype=float)
        if dF is None:
            dF = self.graph_function(side, x)[1]
        B, N = self.planes[side - 1], self.normals[side - 1]
        return x @ B.T + dF @ N.T

    def graph_tangents(self, side: int, hF):
        """Real tangent matrices (..., 2n, n) of the graph chart."""
        B, N = self.planes[side - 1], self.normals[side - 1]
        return B + np.einsum("ak,...kj->...aj", N, hF)

    def project(self, side: int, p):
        return np.asarray(p) @ self.planes[side - 1]

    # chart-level conveniences ----------------------------------------------

    def exterior_chart(self, side: int, x):
        F, dF, hF = self.graph_function(side, x, rmin=self.delta, rmax=1.0)
        return self.graph_point(side, x, dF)

    def transition_chart(self, side: int, x):
        F, dF, hF = self.graph_function(side, x, rmin=0.5 * self.delta, rmax=self.delta)
        return self.graph_point(side, x, dF)

    def neck_graph_chart(self, side: int, x):
        """Graph of grad g_eps alone (the neck written over its plane)."""
        x = np.asarray(x, dtype=float)
        self._check_graph_domain(x, self.params.neck_outer, 1.0)
        _, dg, _ = self.g_eps(side, x)
        return self.graph_point(side, x, dg)


def build_surface(ext1: ExteriorPiece, ext2: ExteriorPiece, neck: LawlorNeck,
                  params: GlueParams) -> GluedSurface:
    if params.n != neck.n or ext1.cubic.shape[0] != neck.n or ext2.cubic.shape[0] != neck.n:
        raise ParameterInconsistency("dimensions of neck, pieces and parameters differ")
    if not np.isclose(params.R0, neck.R0):
        raise ParameterInconsistency("parameters were selected for a different neck")
    return GluedSurface(neck, params, (ext1, ext2))


def glue(a=(1.0, 1.0, 1.0), alpha: float = 0.1, K: float = 1.0, C0: float | None = None,
         pieces: tuple[ExteriorPiece, ExteriorPiece] | None = None, planes=None,
         alpha_max: float = DEFAULT_ALPHA_MAX, quad_tol: float = 1e-13) -> GluedSurface:
    """Assemble the glued surface for neck parameter a and gluing parameter alpha.

    ``planes`` optionally gives the planes the exterior pieces are graphs over;
    they must coincide with the neck's asymptotic planes.
    """
    neck = get_neck(a, quad_tol)
    n = neck.n
    if pieces is None:
        pieces = (ExteriorPiece.flat(n), ExteriorPiece.flat(n))
    if planes is not None:
        for B, Bn in zip(planes, neck.asymptotic_planes()):
            if np.max(np.abs(projector(np.asarray(B, float)) - projector(Bn))) > 1e-10:
                raise PlaneMismatch("exterior plane differs from the neck's asymptotic plane")
    Km = max(p.measured_K() for p in pieces)
    K = max(float(K), Km)
    if C0 is None:
        C0 = default_C0(neck)
    params = select_parameters(alpha, K, C0, neck.R0, n, alpha_max)
    return build_surface(pieces[0], pieces[1], neck, params)
