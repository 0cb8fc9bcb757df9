"""Calibration, curvature, volume and weight computations on the glued surface.

Phase convention: for an oriented orthonormal tangent frame e, dz(e) = cos(theta)
+ i sin(theta).  The mean curvature vector of a Lagrangian is then J grad(theta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterInconsistency, QuadratureNonConvergence, SingularMetric
from .gluing import GluedSurface, radial_cutoff, smoothstep
from .lawlor import sphere_frame
from .quadrature import gauss_legendre, sphere_quadrature
from .symplectic import complex_matrix, real_matrix


# --- pointwise calibration --------------------------------------------------

def graph_calibration(hess: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(cos theta, sin theta) on the graph of a gradient with Hessian ``hess``."""
    n = hess.shape[-1]
    d = np.linalg.det(np.eye(n) + 1j * hess)
    d = d / np.abs(d)
    return d.real, d.imag


def graph_angle(hess: np.ndarray) -> np.ndarray:
    """theta = sum of arctan of the Hessian eigenvalues (no branch cuts)."""
    return np.sum(np.arctan(np.linalg.eigvalsh(0.5 * (hess + np.swapaxes(hess, -1, -2)))), axis=-1)


def frame_calibration(Zc: np.ndarray, sign: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(cos theta, sin theta) from a complex tangent matrix (columns are tangents)."""
    G = np.real(np.swapaxes(Zc.conj(), -1, -2) @ Zc)
    det = np.linalg.det(G)
    if np.any(det <= 0):
        raise SingularMetric("degenerate tangent frame")
    d = sign * np.linalg.det(Zc) / np.sqrt(det)
    return d.real, d.imag


def omega_residual(T: np.ndarray) -> np.ndarray:
    """max_ij |omega(T_i, T_j)| / (|T_i| |T_j|) for real tangent matrices (..., 2n, n)."""
    Tt = np.swapaxes(T, -1, -2)
    n = Tt.shape[-1] // 2
    JT = np.concatenate([-Tt[..., n:], Tt[..., :n]], axis=-1)
    W = JT @ T
    nrm = np.linalg.norm(Tt, axis=-1)
    return np.max(np.abs(W) / (nrm[..., :, None] * nrm[..., None, :]), axis=(-2, -1))


def graph_metric(hess: np.ndarray) -> np.ndarray:
    """Induced metric I + Hess^T Hess of the graph of a gradient."""
    n = hess.shape[-1]
    return np.eye(n) + np.swapaxes(hess, -1, -2) @ hess


# --- probe of the glued surface --------------------------------------------

def annulus_samples(r0: float, r1: float, nr: int, n: int = 3, order: int = 6,
                    endpoints: bool = True) -> np.ndarray:
    """Points r * omega with r on a uniform grid in [r0, r1] and omega on a sphere rule."""
    pts, _ = sphere_quadrature(n, order)
    r = np.linspace(r0, r1, nr) if endpoints else r0 + (r1 - r0) * (np.arange(nr) + 0.5) / nr
    return (r[:, None, None] * pts[None]).reshape(-1, n)


class SurfaceGeometry:
    """Geometric measurements on a :class:`GluedSurface`."""

    def __init__(self, surface: GluedSurface):
        self.S = surface

    # angles and curvature on graph charts --------------------------------

    def graph_theta(self, side: int, x) -> np.ndarray:
        return graph_angle(self.S.graph_function(side, x)[2])

    def graph_tangents(self, side: int, x):
        return self.S.graph_tangents(side, self.S.graph_function(side, x)[2])

    def graph_mean_curvature(self, side: int, x, rel_step: float = 1e-5) -> np.ndarray:
        """Mean curvature vector J grad(theta) by central differences of theta."""
        x = np.asarray(x, dtype=float)
        n = self.S.n
        h = rel_step * max(self.S.delta, 1e-12)
        F, dF, hF = self.S.graph_function(side, x, rmin=self.S.params.neck_outer * 0.9)
        dth = np.empty(x.shape)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            tp = self.graph_theta_free(side, x + e)
            tm = self.graph_theta_free(side, x - e)
            dth[..., k] = (tp - tm) / (2 * h)
        T = self.S.graph_tangents(side, hF)
        return _mean_curvature(T, dth)

    def graph_theta_free(self, side: int, x):
        hF = self.S.graph_function(side, x, rmin=self.S.params.neck_outer * 0.9,
                                   rmax=1.0 + 1e-3)[2]
        return graph_angle(hF)

    # neck chart ----------------------------------------------------------

    def neck_calibration(self, lam, mu):
        Z = self.S.neck_tangents_complex(lam, mu)
        return frame_calibration(Z)

    def neck_theta(self, lam, mu) -> np.ndarray:
        c, s = self.neck_calibration(lam, mu)
        return np.arctan2(s, c)

    def neck_mean_curvature(self, lam, mu, h: float = 1e-5) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        V = sphere_frame(mu)
        n = self.S.n
        dth = np.empty(lam.shape + (n,))
        dth[..., 0] = (self.neck_theta(lam + h, mu) - self.neck_theta(lam - h, mu)) / (2 * h)
        for j in range(n - 1):
            v = V[..., j, :]
            mp = np.cos(h) * mu + np.sin(h) * v
            mm = np.cos(h) * mu - np.sin(h) * v
            dth[..., j + 1] = (self.neck_theta(lam, mp) - self.neck_theta(lam, mm)) / (2 * h)
        T = real_matrix(self.S.neck_tangents_complex(lam, mu, V))
        return _mean_curvature(T, dth)

    # volumes -------------------------------------------------------------

    def graph_volume(self, side: int, r0: float, r1: float, nr: int = 24, order: int = 8) -> float:
        x, w = gauss_legendre(nr)
        r = r0 + (r1 - r0) * (x + 1) / 2
        wr = w * (r1 - r0) / 2 * r ** (self.S.n - 1)
        pts, ws = sphere_quadrature(self.S.n, order)
        X = r[:, None, None] * pts[None]
        hF = self.S.graph_function(side, X.reshape(-1, self.S.n))[2]
        dens = np.sqrt(np.linalg.det(graph_metric(hF))).reshape(len(r), len(pts))
        return float(wr @ dens @ ws)

    def neck_core_volume(self, nl: int = 24, order: int = 8) -> float:
        """Volume of the scaled neck inside both cylinders |pi_i| < delta/2."""
        N = self.S.neck
        pts, ws = sphere_quadrature(self.S.n, order)
        lam1 = self.S.lambda_at_radius(pts, 0.5 * self.S.delta)
        x, w = gauss_legendre(nl)
        tot = 0.0
        split = np.minimum(1.0 / np.sqrt(N.a.max()), 0.5 * lam1)
        for lo, hi in ((np.zeros_like(lam1), split), (split, lam1)):
            L = lo[:, None] + (hi - lo)[:, None] * (x + 1) / 2
            dens = N.volume_density(L, np.broadcast_to(pts[:, None, :], L.shape + (self.S.n,)))
            tot += np.sum(ws[:, None] * w * (hi - lo)[:, None] / 2 * dens)
        return float(2.0 * self.S.eps ** self.S.n * tot)

    def volumes(self, tol: float = 1e-6) -> dict:
        """Region volumes, each certified by doubling the quadrature order."""
        S = self.S
        d = S.delta

        def cert(fn, *args):
            lo, hi = fn(*args, 1), fn(*args, 2)
            err = abs(hi - lo)
            if err > tol * max(1.0, abs(hi)):
                raise QuadratureNonConvergence(f"volume not converged ({err:.2e})")
            return hi, err

        def gv(side, r0, r1, m):
            return self.graph_volume(side, r0, r1, nr=16 * m, order=6 * m)

        def nv(m):
            return self.neck_core_volume(nl=16 * m, order=6 * m)

        out = {}
        errs = {}
        for name, r0, r1 in (("exterior", d, 1.0), ("transition", 0.5 * d, d)):
            v1, e1 = cert(gv, 1, r0, r1)
            v2, e2 = cert(gv, 2, r0, r1)
            out[name] = v1 + v2
            errs[name] = e1 + e2
        out["neck_core"], errs["neck_core"] = cert(nv)
        out["neck_region"] = out["transition"] + out["neck_core"]
        out["total"] = out["exterior"] + out["neck_region"]
        out["error"] = sum(errs.values())
        return out


def _mean_curvature(T: np.ndarray, dth: np.ndarray) -> np.ndarray:
    """J grad(theta) from real tangents T (..., 2n, n) and chart differential dth."""
    G = np.einsum("...ai,...aj->...ij", T, T)
    grad = np.einsum("...ai,...i->...a", T, np.linalg.solve(G, dth[..., None])[..., 0])
    n = grad.shape[-1] // 2
    return np.concatenate([-grad[..., n:], grad[..., :n]], axis=-1)


# --- chart-level API --------------------------------------------------------

REGIONS = ("exterior", "transition", "neck-core", "neck-total", "all")
_REGION_KEYS = {"exterior": "exterior", "transition": "transition", "neck-core": "neck_core",
                "neck-total": "neck_region", "all": "total"}


@dataclass(frozen=True)
class CalibrationSample:
    """Calibration data at a batch of points; ``chart`` is 1, 2 (graphs) or "neck"."""

    chart: object
    points: np.ndarray
    re_dz: np.ndarray
    im_dz: np.ndarray
    theta: np.ndarray
    mean_curvature: np.ndarray | None


def _chart_data(surface: GluedSurface, chart, coords):
    """Ambient points, real tangents (..., 2n, n) and orientation sign for a chart."""
    if chart == "neck":
        lam, mu = coords
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        T = real_matrix(surface.neck_tangents_complex(lam, mu))
        return surface.neck_point(lam, mu), T, 1.0
    if chart not in (1, 2):
        raise ValueError(f"unknown chart {chart!r}")
    x = np.asarray(coords, dtype=float)
    F, dF, hF = surface.graph_function(chart, x)
    return surface.graph_point(chart, x, dF), surface.graph_tangents(chart, hF), surface.signs[chart - 1]


def lagrangian_angle(surface: GluedSurface, chart, coords,
                     curvature: bool = True) -> CalibrationSample:
    """dz on an orthonormalised tangent frame, the angle it defines and J grad(theta)."""
    pts, T, sign = _chart_data(surface, chart, coords)
    c, s = frame_calibration(complex_matrix(T), sign)
    geom = SurfaceGeometry(surface)
    if chart == "neck":
        th = np.arctan2(s, c)
        H = geom.neck_mean_curvature(*coords) if curvature else None
    else:
        th = geom.graph_theta(chart, coords)
        H = geom.graph_mean_curvature(chart, coords) if curvature else None
    return CalibrationSample(chart, pts, c, s, th, H)


def mean_curvature(surface: GluedSurface, chart, coords) -> np.ndarray:
    return lagrangian_angle(surface, chart, coords).mean_curvature


def volume(surface: GluedSurface, region: str = "all", tol: float = 1e-6) -> float:
    if region not in _REGION_KEYS:
        raise ValueError(f"region must be one of {REGIONS}")
    return SurfaceGeometry(surface).volumes(tol)[_REGION_KEYS[region]]


@dataclass(frozen=True)
class ResidualField:
    """E = sin(theta) sampled on every chart, with the weight at each sample."""

    points: np.ndarray
    zone: np.ndarray
    E: np.ndarray
    rho: np.ndarray

    @property
    def weighted_sup(self) -> float:
        return float(np.max(np.abs(self.rho ** 2 * self.E)))

    def sup(self, zone: str) -> float:
        m = self.zone == zone
        return float(np.max(np.abs(self.E[m]))) if np.any(m) else 0.0


def residual(surface: GluedSurface, weight: "Weight", nr: int = 48, order: int = 8,
             n_lam: int = 32) -> ResidualField:
    """Sample E over the exterior, transition, neck-graph and neck-core zones."""
    S = surface
    d, r_neck = S.delta, S.params.neck_outer
    pts, zones, E = [], [], []
    bands = (("exterior", d, 1.0), ("transition", 0.5 * d, d), ("neck", r_neck * (1 + 1e-6), 0.5 * d))
    for side in (1, 2):
        for zone, r0, r1 in bands:
            x = annulus_samples(r0, r1, nr, S.n, order)
            F, dF, hF = S.graph_function(side, x)
            pts.append(S.graph_point(side, x, dF))
            E.append(graph_calibration(hF)[1])
            zones += [zone] * len(x)
    mu, _ = sphere_quadrature(S.n, order)
    lam_max = S.lambda_at_radius(mu, r_neck * (1 + 1e-6))
    lam = np.linspace(0.0, 1.0, n_lam)[:, None] * lam_max[None, :]
    for sg in (1.0, -1.0):
        L = sg * lam
        M = np.broadcast_to(mu, L.shape + (S.n,))
        pts.append(S.neck_point(L, M).reshape(-1, 2 * S.n))
        E.append(frame_calibration(S.neck_tangents_complex(L, M))[1].ravel())
        zones += ["neck"] * L.size
    P = np.concatenate(pts)
    rho = weight.rho(np.linalg.norm(P, axis=1))
    return ResidualField(P, np.array(zones), np.concatenate(E), rho)


# --- weight function --------------------------------------------------------

@dataclass(frozen=True)
class Weight:
    """rho = R eps on B_{eps a}, R outside B_{eps^beta b}, increasing in between.

    ``profile`` selects the interpolation: "linear" grows linearly in r across
    the annulus (slope of order eps^-beta); "log" is linear in log r.  The two
    joints are rounded by integrating a smooth step over a fraction ``w`` of
    the interpolation variable, which leaves both plateaus exact.
    """

    eps: float
    beta: float
    a: float
    b: float = 1.0
    R: float = 1.0
    w: float = 0.25
    profile: str = "linear"

    @property
    def r_in(self) -> float:
        return self.eps * self.a

    @property
    def r_out(self) -> float:
        return self.eps ** self.beta * self.b

    def check(self):
        if self.profile not in ("linear", "log"):
            raise ParameterInconsistency(f"unknown weight profile {self.profile!r}")
        if not 0 < self.w < 0.5:
            raise ParameterInconsistency("joint smoothing fraction must lie in (0, 1/2)")
        if self.r_out <= self.r_in or sum(self._widths) >= 1.0:
            raise ParameterInconsistency(
                f"weight annulus ({self.r_in:.3g}, {self.r_out:.3g}) too thin for smoothing")
        return self

    def _u(self, r):
        """Interpolation variable: 0 at r_in, 1 at r_out, and its r-derivative."""
        r = np.maximum(np.asarray(r, dtype=float), 1e-300)
        if self.profile == "linear":
            span = self.r_out - self.r_in
            return (r - self.r_in) / span, np.full_like(r, 1.0 / span)
        span = np.log(self.r_out / self.r_in)
        return np.log(r / self.r_in) / span, 1.0 / (r * span)

    @property
    def _widths(self) -> tuple[float, float]:
        """Joint widths in the interpolation variable: (inner, outer).

        The inner joint is rounded over a fraction ``w`` of r_in itself, so the
        rounding never reaches far past r_in even when r_in << r_out.
        """
        if self.profile == "linear":
            return self.w * self.r_in / (self.r_out - self.r_in), self.w
        return self.w, self.w

    @staticmethod
    def _ramp(u, w):
        """Integral of the smooth step S(t/w): 0 for u <= 0, u - w/2 for u >= w."""
        u = np.asarray(u, dtype=float)
        out = np.where(u >= w, u - 0.5 * w, 0.0)
        m = (u > 0) & (u < w)
        if np.any(m):
            x, wt = gauss_legendre(32)
            s = u[m] / w
            lo = s <= 0.5
            # integrate S on [0, s] below the midpoint and 1 - S on [s, 1] above it,
            # so the quadrature only ever sees the small tail of the step
            t = np.where(lo, s, 1.0 - s)[:, None] * (x + 1) / 2
            a = np.where(lo[:, None], smoothstep(t)[0], 1.0 - smoothstep(1.0 - t)[0])
            part = np.sum(a * wt, axis=1) * np.where(lo, s, 1.0 - s) / 2
            out[m] = w * np.where(lo, part, s - 0.5 + part)
        return out

    def _clamp(self, u):
        """Smooth monotone map equal to 0 for u <= 0 and 1 for u >= 1."""
        w1, w2 = self._widths
        c = (self._ramp(u, w1) - self._ramp(u - 1.0 + w2, w2)) / (1.0 - 0.5 * (w1 + w2))
        return np.clip(c, 0.0, 1.0)

    def _dclamp(self, u):
        w1, w2 = self._widths
        return ((smoothstep(u / w1)[0] - smoothstep((u - 1.0 + w2) / w2)[0])
                / (1.0 - 0.5 * (w1 + w2)))

    def _lo(self) -> float:
        return self.R * self.eps

    def rho(self, r) -> np.ndarray:
        u, _ = self._u(r)
        c = self._clamp(u)
        if self.profile == "linear":
            return self._lo() + (self.R - self._lo()) * c
        out = self._lo() * np.exp(np.log(1.0 / self.eps) * c)
        return np.where(c >= 1.0, self.R, np.where(c <= 0.0, self._lo(), out))

    def drho(self, r) -> np.ndarray:
        u, du = self._u(r)
        dc = self._dclamp(u) * du
        if self.profile == "linear":
            return (self.R - self._lo()) * dc
        return self.rho(r) * np.log(1.0 / self.eps) * dc


def weight_rho(surface: GluedSurface, beta: float, R: float = 1.0, b: float = 1.0,
               a_factor: float = 1.0, w: float = 0.25, profile: str = "linear") -> Weight:
    """Weight for the surface: inner radius eps * a_factor * R0, outer radius eps^beta * b."""
    return Weight(eps=surface.eps, beta=beta, a=a_factor * surface.params.R0, b=b, R=R,
                  w=w, profile=profile).check()


def holder_seminorm_1d(r: np.ndarray, f: np.ndarray, beta: float) -> float:
    """sup |f(r_i) - f(r_j)| / |r_i - r_j|^beta over all sample pairs."""
    df = np.abs(f[:, None] - f[None, :])
    dr = np.abs(r[:, None] - r[None, :])
    m = dr > 0
    return float(np.max(df[m] / dr[m] ** beta))


# --- cutoff bounds ----------------------------------------------------------

def cutoff_bound(delta: float, samples: int = 2001) -> float:
    """sup |eta| + delta|eta'| + delta^2|eta''| + delta^3|eta'''| (radial derivatives)."""
    r = np.linspace(0.0, 1.2 * delta, samples)
    e, e1, e2, e3 = radial_cutoff(r, delta)
    return float(np.max(np.abs(e) + delta * np.abs(e1) + delta ** 2 * np.abs(e2)
                        + delta ** 3 * np.abs(e3)))
