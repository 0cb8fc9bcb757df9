"""Numerical integration: adaptive Gauss-Kronrod, half-line integrals, sphere rules."""

from __future__ import annotations

import heapq
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .errors import QuadratureNonConvergence

# Kronrod 15-point abscissae (descending, last is the centre) and weights,
# with the embedded 7-point Gauss weights on the odd-indexed abscissae.
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_X15 = np.concatenate([-_XK[:-1], _XK[::-1]])
_W15 = np.concatenate([_WK[:-1], _WK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5]] = _WG[:3]
_W7[[9, 11, 13]] = _WG[2::-1]
_W7[7] = _WG[3]


def _gk15(f: Callable, a: float, b: float) -> tuple[np.ndarray, float]:
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    y = np.asarray(f(c + h * _X15), dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    k = h * (_W15 @ y)
    g = h * (_W7 @ y)
    return k, float(np.max(np.abs(k - g)))


def adaptive_quad(f: Callable, a: float, b: float, tol: float = 1e-13,
                  max_intervals: int = 2000) -> tuple[np.ndarray, float]:
    """Globally adaptive G7-K15 integration of a vectorised (possibly vector-valued) f.

    Returns ``(value, error_estimate)``; ``value`` has one entry per component.
    Raises QuadratureNonConvergence when the interval budget is exhausted.
    """
    k, e = _gk15(f, a, b)
    heap = [(-e, a, b, k)]
    total, err = k.copy(), e
    n = 1
    while err > tol:
        if n >= max_intervals:
            raise QuadratureNonConvergence(
                f"adaptive quadrature on [{a}, {b}] stalled at error {err:.3e} > {tol:.1e}")
        ne, lo, hi, kk = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk15(f, lo, mid)
        k2, e2 = _gk15(f, mid, hi)
        total += k1 + k2 - kk
        err += e1 + e2 + ne
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        n += 1
    # re-sum to limit drift from the incremental updates
    total = np.sum([item[3] for item in heap], axis=0)
    err = sum(-item[0] for item in heap)
    return total, err


@lru_cache(maxsize=None)
def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(m)


def panel_integrate(f: Callable, lo: np.ndarray, hi: np.ndarray, m: int = 20) -> np.ndarray:
    """Integrate f over each [lo_i, hi_i] with an m-point Gauss rule.

    f maps an array of abscissae of shape (N, m) to shape (N, m) or (N, m, k).
    """
    x, w = gauss_legendre(m)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    c = 0.5 * (lo + hi)[..., None]
    h = 0.5 * (hi - lo)[..., None]
    y = np.asarray(f(c + h * x))
    if y.ndim == lo.ndim + 2:
        return np.einsum("...mk,m->...k", y, w) * h
    return (y @ w) * h[..., 0]


def composite_gauss(f: Callable, a: float, b: float, panels: int, m: int = 20) -> np.ndarray:
    """Fixed composite Gauss-Legendre rule; used as an independent reference."""
    edges = np.linspace(a, b, panels + 1)
    return np.sum(panel_integrate(f, edges[:-1], edges[1:], m), axis=0)


class HalfLineIntegral:
    """Cumulative integral F(x) = int_0^x f(s) ds of an even, decaying integrand.

    ``f`` maps an array of abscissae to an array with a trailing component axis.
    On [0, L] values come from tabulated knots (adaptive Gauss-Kronrod between
    knots) plus a short Gauss panel; beyond L the integral is written as
    F(inf) - int_0^{1/x} f(1/t) t^-2 dt, whose integrand is regular at t = 0.
    """

    def __init__(self, f: Callable, L: float, h: float, tol: float = 1e-13, m: int = 24,
                 state: dict | None = None):
        self.f = f
        self.L = float(L)
        self.m = m
        if state is not None:
            self.knots = np.asarray(state["knots"], dtype=float)
            self.cum = np.asarray(state["cum"], dtype=float)
            self.total = np.asarray(state["total"], dtype=float)
            self.error = float(state["error"])
            return
        nk = max(2, int(np.ceil(self.L / h)))
        self.knots = np.linspace(0.0, self.L, nk + 1)
        cums = [np.zeros(self._ncomp())]
        err = 0.0
        for lo, hi in zip(self.knots[:-1], self.knots[1:]):
            v, e = adaptive_quad(f, lo, hi, tol=tol / nk)
            cums.append(cums[-1] + v)
            err += e
        self.cum = np.array(cums)
        tail, e = adaptive_quad(self._g, 0.0, 1.0 / self.L, tol=tol)
        self.total = self.cum[-1] + tail
        self.error = err + e

    def state(self) -> dict:
        """Tabulated data, enough to rebuild the object for the same integrand."""
        return {"L": self.L, "m": self.m, "knots": self.knots.tolist(),
                "cum": self.cum.tolist(), "total": self.total.tolist(), "error": self.error}

    def _ncomp(self) -> int:
        y = np.asarray(self.f(np.array([0.5 * self.L])))
        return 1 if y.ndim == 1 else y.shape[-1]

    def _g(self, t):
        t = np.asarray(t, dtype=float)
        y = np.asarray(self.f(1.0 / t))
        if y.ndim == t.ndim:
            y = y[..., None]
        return y / (t * t)[..., None]

    def tail(self, x) -> np.ndarray:
        """int_x^inf f for x >= L (vectorised)."""
        x = np.asarray(x, dtype=float)
        return panel_integrate(self._g, np.zeros_like(x), 1.0 / x, self.m)

    def __call__(self, x) -> np.ndarray:
        """F(x) with a trailing component axis; odd in x."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.empty(x.shape + (self.cum.shape[1],))
        inner = ax <= self.L
        if np.any(inner):
            xi = ax[inner]
            h = self.knots[1] - self.knots[0]
            j = np.minimum((xi / h).astype(int), len(self.knots) - 2)
            out[inner] = self.cum[j] + self._panel(self.knots[j], xi)
        if np.any(~inner):
            out[~inner] = self.total - self.tail(ax[~inner])
        return np.sign(x)[..., None] * out

    def _panel(self, lo, hi):
        def fk(s):
            y = np.asarray(self.f(s))
            return y if y.ndim == s.ndim + 1 else y[..., None]
        return panel_integrate(fk, lo, hi, self.m)


def sphere_area(n: int) -> float:
    """Volume of the unit sphere S^{n-1} in R^n."""
    return float(2.0 * np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def sphere_quadrature(n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on S^{n-1}: points (N, n) and weights summing to |S^{n-1}|.

    Built recursively from Gauss-Jacobi rules in cos(phi) with weight
    (1 - u^2)^((m-2)/2) and a trapezoid rule on the circle.
    """
    if n < 2:
        raise ValueError("sphere dimension must be >= 1")
    if n == 2:
        k = 2 * order
        ang = 2 * np.pi * (np.arange(k) + 0.5) / k
        return np.stack([np.cos(ang), np.sin(ang)], axis=1), np.full(k, 2 * np.pi / k)
    sub_p, sub_w = sphere_quadrature(n - 1, order)
    p = 0.5 * (n - 3)
    u, wu = roots_jacobi(order, p, p)
    pts = np.concatenate([
        np.concatenate([np.full((len(sub_p), 1), ui), np.sqrt(1 - ui * ui) * sub_p], axis=1)
        for ui in u])
    wts = np.concatenate([wi * sub_w for wi in wu])
    return pts, wts
