"""Measurements per gluing parameter, scaling fits and pass/fail checks.

``measure_neck`` covers the alpha-independent neck checks, ``measure_alpha``
everything that depends on one glued surface, and ``neck_checks`` and
``sweep_checks`` turn the collected numbers into :class:`Check` records.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config
from .geometry import (SurfaceGeometry, annulus_samples, frame_calibration, graph_angle,
                       holder_seminorm_1d, omega_residual, residual, weight_rho)
from .gluing import ExteriorPiece, GluedSurface, glue
from .lawlor import LawlorNeck, get_neck, match_angles, sphere_frame
from .mesh import icosphere
from .quadrature import sphere_quadrature
from .spectral import GluedSpectrum, MeshConfig
from .symplectic import characteristic_angles, real_matrix

PASS, FAIL, INCONCLUSIVE, INSUFFICIENT = "PASS", "FAIL", "INCONCLUSIVE", "INSUFFICIENT"
MIN_R2 = 0.9
MIN_SLOPE_POINTS = 3  # a two-point fit has R^2 = 1 by construction


# --- check records ----------------------------------------------------------

@dataclass
class Check:
    name: str
    criterion: int
    status: str
    measured: float | None
    target: str
    slope: float | None = None
    r2: float | None = None
    detail: str = ""

    @property
    def evaluated(self) -> bool:
        return self.status != INSUFFICIENT

    @property
    def passed(self) -> bool:
        return self.status == PASS


def fit_loglog(x, y) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    pred = slope * lx + icpt
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), float(r2)


def slope_check(name: str, crit: int, x, y, lo: float = -np.inf, hi: float = np.inf,
                target: str = "") -> Check:
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    if len(x) < MIN_SLOPE_POINTS:
        return Check(name, crit, INSUFFICIENT, None, target, detail="insufficient points")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        return Check(name, crit, FAIL, None, target, detail="non-positive or non-finite samples")
    slope, _, r2 = fit_loglog(x, y)
    if r2 < MIN_R2:
        status = INCONCLUSIVE
    else:
        status = PASS if lo <= slope <= hi else FAIL
    return Check(name, crit, status, slope, target, slope=slope, r2=r2)


def bound_check(name: str, crit: int, value: float, limit: float, upper: bool = True,
                target: str = "") -> Check:
    ok = value <= limit if upper else value >= limit
    target = target or (f"<= {limit:g}" if upper else f">= {limit:g}")
    return Check(name, crit, PASS if ok and np.isfinite(value) else FAIL, float(value), target)


def variation_check(name: str, crit: int, values, factor: float, target: str = "") -> Check:
    v = np.abs(np.asarray(values, float))
    target = target or f"positive, max/min <= {factor:g}"
    if len(v) < 2:
        return Check(name, crit, INSUFFICIENT, float(v[0]) if len(v) else None, target,
                     detail="insufficient points")
    ratio = float(v.max() / v.min()) if v.min() > 0 else np.inf
    return Check(name, crit, PASS if ratio <= factor else FAIL, ratio, target)


# --- construction helpers ---------------------------------------------------

def make_pieces(cfg: Config) -> tuple[ExteriorPiece, ExteriorPiece]:
    if cfg.exterior == "flat" or cfg.cubic_scale == 0:
        return ExteriorPiece.flat(cfg.n), ExteriorPiece.flat(cfg.n)
    return (ExteriorPiece.random_cubic(cfg.n, cfg.cubic_scale, cfg.seed),
            ExteriorPiece.random_cubic(cfg.n, cfg.cubic_scale, cfg.seed + 1))


def make_surface(cfg: Config, alpha: float) -> GluedSurface:
    return glue(cfg.a, alpha, K=cfg.K, C0=cfg.C0, pieces=make_pieces(cfg),
                alpha_max=cfg.alpha_max, quad_tol=cfg.quad_tol)


def make_weight(cfg: Config, surface: GluedSurface):
    return weight_rho(surface, cfg.beta, R=cfg.weight_R, b=cfg.weight_b,
                      a_factor=cfg.weight_a_factor, w=cfg.weight_smoothing,
                      profile=cfg.weight_profile)


def mesh_config(cfg: Config) -> MeshConfig:
    return MeshConfig(level=cfg.mesh_level, layers=cfg.layers, first_dlam=cfg.first_dlam,
                      collar=cfg.collar, n_eig=cfg.n_eig)


# --- neck measurements ------------------------------------------------------

def _sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    if n == 3:
        return icosphere(3)[0][:count]
    u = np.random.default_rng(seed).normal(size=(count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def fd_metric(neck: LawlorNeck, lam, mu, h: float = 1e-5) -> np.ndarray:
    """Gram matrix of central-difference tangents of the embedding in the (lam, frame) chart."""
    V = sphere_frame(mu)
    cols = [(neck.embed(lam + h, mu) - neck.embed(lam - h, mu)) / (2 * h)]
    for j in range(neck.n - 1):
        v = V[..., j, :]
        mp = np.cos(h) * mu + np.sin(h) * v
        mm = np.cos(h) * mu - np.sin(h) * v
        cols.append((neck.embed(lam, mp) - neck.embed(lam, mm)) / (2 * h))
    T = np.stack(cols, axis=-1)
    return np.einsum("...ai,...aj->...ij", T, T)


def measure_neck(cfg: Config) -> dict:
    neck = get_neck(cfg.a, cfg.quad_tol)
    n = neck.n
    out: dict = {}
    # special Lagrangian residuals on a (lam, mu) grid, analytic tangents
    lam = np.linspace(-8.0, 8.0, 64)
    mu = _sphere_points(n, 642)
    L = np.repeat(lam, len(mu))
    M = np.tile(mu, (len(lam), 1))
    Z = neck.tangents_complex(L, M)
    _, im = frame_calibration(Z)
    out["sl_im_dz"] = float(np.max(np.abs(im)))
    out["sl_omega"] = float(np.max(omega_residual(real_matrix(Z))))

    # metric formula against finite differences, random (a, lam, mu)
    rng = np.random.default_rng(cfg.seed + 11)
    errs = []
    for _ in range(20):
        a = rng.uniform(0.5, 3.0, size=n)
        nk = LawlorNeck(a, tol=cfg.quad_tol)
        lm = rng.uniform(-3.0, 3.0, size=50)
        u = rng.normal(size=(50, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        G = nk.induced_metric(lm, u, sphere_frame(u))
        Gfd = fd_metric(nk, lm, u)
        errs.append(np.linalg.norm(G - Gfd, axis=(1, 2)) / np.linalg.norm(G, axis=(1, 2)))
    out["metric_rel_err"] = float(np.max(np.concatenate(errs)))

    # asymptotic planes from the embedding Jacobian far out on both ends
    mu0 = np.ones(n) / np.sqrt(n)
    Tp = neck.tangents(np.array(1e6), mu0)
    Tm = neck.tangents(np.array(-1e6), mu0)
    pair = characteristic_angles(Tp, Tm)
    out["plane_angle_sum"] = float(np.sum(pair.angles))
    out["plane_angle_sum_err"] = abs(out["plane_angle_sum"] - np.pi)
    out["plane_angles"] = [float(t) for t in pair.angles]

    # decay of the graphing function over 2 R0 .. 20 R0
    radii = np.geomspace(2 * neck.R0, 20 * neck.R0, 12)
    dirs, _ = sphere_quadrature(n, 6)
    s = (radii[:, None, None] * dirs[None]).reshape(-1, n)
    g, t, _ = neck.asymptotic_graph(s)
    gn = np.linalg.norm(t, axis=-1).reshape(len(radii), -1).max(axis=1)
    ga = np.abs(g).reshape(len(radii), -1).max(axis=1)
    out["decay_radii"] = radii.tolist()
    out["decay_grad"] = gn.tolist()
    out["decay_g"] = ga.tolist()
    bound = (2.0 / n) * (2.0 / neck.A) ** (n / 2) * np.linalg.norm(s, axis=-1) ** (1 - n)
    out["grad_bound_ratio"] = float(np.max(np.abs(t).max(axis=-1) / bound))

    # round trip through the angle matching
    a_ref = np.array([1.0, 2.0, 3.0])
    targets = get_neck(a_ref, cfg.quad_tol).plane_angles()
    res = match_angles(targets)
    a_rec = res.a / res.a.min()
    out["match_rel_err"] = float(np.max(np.abs(a_rec - a_ref) / a_ref))
    out["C0"] = float(cfg.C0) if cfg.C0 is not None else None
    return out


# --- per-alpha measurements -------------------------------------------------

@dataclass
class AlphaResult:
    alpha: float
    values: dict
    surface: GluedSurface = field(repr=False)
    spectrum: GluedSpectrum | None = field(default=None, repr=False)


def _integrity(S: GluedSurface, order: int = 6, nr: int = 12) -> dict:
    out = {}
    mu, _ = sphere_quadrature(S.n, order)
    r_lo, r_hi = S.params.neck_outer * 1.001, 0.5 * S.delta
    lam_lo, lam_hi = S.lambda_at_radius(mu, r_lo), S.lambda_at_radius(mu, r_hi)
    w = np.linspace(0.0, 1.0, nr)[:, None]
    lam = (lam_lo + w * (lam_hi - lam_lo)).ravel()
    M = np.tile(mu, (nr, 1))
    worst = 0.0
    for side, sg in ((1, 1.0), (2, -1.0)):
        p = S.neck_point(sg * lam, M)
        x = S.project(side, p)
        worst = max(worst, float(np.max(np.abs(S.neck_graph_chart(side, x) - p))))
    out["overlap_err"] = worst
    inner = annulus_samples(S.params.neck_outer * 1.001, 0.5 * S.delta, nr, S.n, order)
    outer = annulus_samples(S.delta, 1.0, nr, S.n, order)
    trans = annulus_samples(0.5 * S.delta, S.delta, nr, S.n, order)
    exact = 0.0
    omega = 0.0
    for side in (1, 2):
        exact = max(exact, float(np.max(np.abs(S.graph_point(side, inner)
                                                - S.neck_graph_chart(side, inner)))))
        piece = S.pieces[side - 1]
        direct = outer @ S.planes[side - 1].T + piece.grad(outer) @ S.normals[side - 1].T
        exact = max(exact, float(np.max(np.abs(S.exterior_chart(side, outer) - direct))))
        hF = S.graph_function(side, trans)[2]
        omega = max(omega, float(np.max(omega_residual(S.graph_tangents(side, hF)))))
    out["zone_exactness"] = exact
    out["transition_omega"] = omega
    return out


def _transition_holder(S: GluedSurface, beta: float, nr: int = 160, order: int = 4) -> float:
    """Largest radial difference quotient of sin(theta) over the transition annulus."""
    dirs, _ = sphere_quadrature(S.n, order)
    r = np.linspace(0.5 * S.delta, S.delta, nr)
    worst = 0.0
    for side in (1, 2):
        for u in dirs:
            x = r[:, None] * u
            F, dF, hF = S.graph_function(side, x)
            sn = np.sin(graph_angle(hF))
            P = S.graph_point(side, x, dF)
            d = np.linalg.norm(P[:, None] - P[None], axis=-1)
            m = d > 0
            q = np.abs(sn[:, None] - sn[None])[m] / d[m] ** beta
            worst = max(worst, float(q.max()))
    return worst


def transition_displacement(S: GluedSurface, nr: int = 24, order: int = 6) -> tuple[float, float]:
    """sup over the transition annulus of |F - f| and of |grad F - grad f|.

    The first is the graph-function displacement eta (g_eps - f); the second is
    the ambient distance between the glued surface and the exterior graph.
    """
    x = annulus_samples(0.5 * S.delta, S.delta, nr, S.n, order)
    val = grad = 0.0
    for side in (1, 2):
        F, dF, _ = S.graph_function(side, x)
        piece = S.pieces[side - 1]
        val = max(val, float(np.max(np.abs(F - piece.value(x)))))
        grad = max(grad, float(np.max(np.linalg.norm(dF - piece.grad(x), axis=-1))))
    return val, grad


def _weight_properties(W, beta: float, n: int, lumped_mass, radii) -> dict:
    r = np.geomspace(W.r_in * 1e-2, 1.0, 4000)
    rho = W.rho(r)
    out = {"weight_K1": float(np.max(np.abs(W.drho(r))) * W.eps ** beta)}
    ann = (r >= W.r_in) & (r <= W.r_out)
    out["weight_C2"] = float(np.min(rho[ann] / r[ann]))
    rr = np.concatenate([np.linspace(0.0, 1.0, 800), np.geomspace(W.r_in * 1e-2, 1.0, 800)])
    rr = np.unique(rr)
    for k in (1, 2):
        out[f"weight_holder_k{k}"] = holder_seminorm_1d(rr, W.rho(rr) ** k, beta)
    out["weight_holder_beta"] = holder_seminorm_1d(rr, W.rho(rr) ** beta, beta)
    p = n - 1
    out["weight_Lp"] = float(np.sum(lumped_mass * W.rho(radii) ** (-p)))
    return out


def exterior_bound_ratio(S: GluedSurface, samples: int = 200, seed: int = 3) -> float:
    """max over pieces and radii d of (|f| + d|Df| + d^2|D^2f| + d^3|D^3f|)_{B_d} / (K d^3)."""
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(samples, S.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    worst = 0.0
    for pc in S.pieces:
        for d in np.geomspace(S.delta, 1.0, 8):
            x = d * u * rng.uniform(0, 1, size=(samples, 1)) ** (1.0 / S.n)
            q = (np.abs(pc.value(x)).max() + d * np.linalg.norm(pc.grad(x), axis=-1).max()
                 + d ** 2 * np.linalg.norm(pc.hess(x), ord=2, axis=(-2, -1)).max()
                 + d ** 3 * np.sqrt(np.sum(pc.cubic ** 2)))
            worst = max(worst, float(q / (S.params.K * d ** 3)))
    return worst


def measure_alpha(cfg: Config, alpha: float, spectral: bool = True,
                  keep: bool = False) -> AlphaResult:
    t0 = time.perf_counter()
    S = make_surface(cfg, alpha)
    W = make_weight(cfg, S)
    geom = SurfaceGeometry(S)
    v: dict = {"alpha": float(alpha), "eps": S.eps, "delta": S.delta, "K": S.params.K,
               "C0": S.params.C0}
    v.update(_integrity(S))
    R = residual(S, W)
    v["sup_sin_T"] = R.sup("transition")
    v["sup_E_exterior"] = R.sup("exterior")
    v["sup_E_neck"] = R.sup("neck")
    v["sup_rho2E"] = R.weighted_sup
    v["holder_sin_T"] = _transition_holder(S, cfg.beta)
    v["transition_displacement"], v["transition_grad_displacement"] = transition_displacement(S)
    x = annulus_samples(0.5 * S.delta, S.delta, 16, S.n, 6)
    v["sup_H_T"] = max(float(np.max(np.linalg.norm(geom.graph_mean_curvature(sd, x), axis=-1)))
                       for sd in (1, 2))
    vols = geom.volumes()
    v["vol_neck_region"] = vols["neck_region"]
    v["vol_transition"] = vols["transition"]
    v["vol_total"] = vols["total"]
    v["vol_cert_err"] = vols["error"]

    sp = GluedSpectrum(S, mesh_config(cfg))
    v["mesh_nodes"] = len(sp.mesh.points)
    v["mesh_volume"] = sp.volume
    radii = np.linalg.norm(sp.mesh.points, axis=1)
    v.update(_weight_properties(W, cfg.beta, S.n, np.asarray(sp.M.sum(axis=1)).ravel(), radii))
    if spectral:
        nu = sp.nu
        v["nu0"], v["nu1"], v["nu2"] = float(nu[0]), float(nu[1]), float(nu[2])
        v["eig_backward_err"] = float(np.max(sp.eig.residuals))
        u0 = sp.eig.vectors[:, 0]
        v["nu0_vector_variation"] = float(np.ptp(u0) / np.max(np.abs(u0)))
        v["rayleigh_bound"] = sp.rayleigh_test_bound()
        f = sp.fields()
        v["sup_Sbar_minus_S"] = float(np.max(np.abs(f.S_bar - f.S)))
        v["sigma_pairing"] = f.sigma_pairing
        v["psi1_integral"] = float(np.sum(f.psi1_weak))
        v["psi1_pairing"] = float(f.S @ f.psi1_weak)
        rho2 = W.rho(radii) ** 2
        v["psi1_pairing_weighted"] = float((rho2 * f.S) @ f.psi1_weak)
        flux = float(f.S @ (sp.B @ f.v_boundary))
        green = flux + v["nu1"] * sp.inner(f.v_e, f.S)
        v["green_residual"] = abs(v["psi1_pairing"] - green) / max(abs(green), 1e-300)
    if spectral and all(pc.is_flat for pc in S.pieces):
        ext = sp.mesh.labels["zone"] == "exterior"
        u = np.cos(3 * sp.mesh.points[:, 0]) + sp.mesh.points[:, 1] ** 2
        lin = sp.linearized_apply(u, a=0.7)
        ref = sp.laplacian(u) + 0.7
        v["linearized_flat_err"] = float(np.max(np.abs(lin[ext] - ref[ext]))
                                         / max(1.0, float(np.max(np.abs(ref[ext])))))
    if not all(pc.is_flat for pc in S.pieces):
        v["exterior_bound_ratio"] = exterior_bound_ratio(S)
    v["seconds"] = time.perf_counter() - t0
    return AlphaResult(alpha, v, S, sp if (keep and spectral) else None)


# --- checks -----------------------------------------------------------------

CRITERIA = {
    1: "neck special Lagrangian residual",
    2: "neck metric formula",
    3: "asymptotic plane angle sum",
    4: "graph decay exponents",
    5: "angle matching round trip",
    6: "gluing integrity",
    7: "calibration residual scaling",
    8: "volume scaling",
    9: "spectrum",
    10: "eigenfunction approximation",
    11: "psi-field contracts",
    12: "weight function properties",
}


def neck_checks(nm: dict, n: int) -> list[Check]:
    c = [bound_check("sl_im_dz", 1, nm["sl_im_dz"], 1e-8),
         bound_check("sl_omega", 1, nm["sl_omega"], 1e-8),
         bound_check("metric_rel_err", 2, nm["metric_rel_err"], 1e-6),
         bound_check("plane_angle_sum_err", 3, nm["plane_angle_sum_err"], 1e-6)]
    c.append(slope_check("decay_grad_slope", 4, nm["decay_radii"], nm["decay_grad"],
                         -(n - 1) - 0.1, -(n - 1) + 0.1, f"{-(n - 1)} +- 0.1"))
    c.append(slope_check("decay_g_slope", 4, nm["decay_radii"], nm["decay_g"],
                         -(n - 2) - 0.1, -(n - 2) + 0.1, f"{-(n - 2)} +- 0.1"))
    c.append(bound_check("decay_grad_bound_ratio", 4, nm["grad_bound_ratio"], 1.0))
    c.append(bound_check("match_rel_err", 5, nm["match_rel_err"], 1e-5))
    return c


def sweep_checks(rows: list[dict], n: int, beta: float) -> list[Check]:
    al = [r["alpha"] for r in rows]
    col = lambda k: [r[k] for r in rows]
    eps = col("eps")
    c: list[Check] = []
    c.append(bound_check("overlap_err", 6, max(col("overlap_err")), 1e-9))
    c.append(bound_check("transition_omega", 6, max(col("transition_omega")), 1e-8))
    c.append(bound_check("zone_exactness", 6, max(col("zone_exactness")), 0.0,
                         target="== 0 (bitwise)"))
    c.append(slope_check("transition_displacement_slope", 6, al, col("transition_displacement"),
                         2.7, target=">= 2.7"))
    if "exterior_bound_ratio" in rows[0]:
        c.append(bound_check("exterior_bound_ratio", 6, max(col("exterior_bound_ratio")), 1.0))
    c.append(slope_check("sup_sin_T_slope", 7, al, col("sup_sin_T"), 0.9, target=">= 0.9"))
    c.append(variation_check("sup_H_T_variation", 7, col("sup_H_T"), 2.0))
    lo = 3 - 2 * beta - 2 * beta / n - 0.3
    c.append(slope_check("sup_rho2E_slope", 7, al, col("sup_rho2E"), lo, target=f">= {lo:.3f}"))
    c.append(slope_check("vol_neck_slope", 8, al, col("vol_neck_region"), n - 0.3, n + 0.3,
                         f"{n} +- 0.3"))
    c.append(variation_check("vol_total_variation", 8, col("vol_total"), 1.1,
                             "max/min <= 1.1"))
    c.append(bound_check("mesh_volume_rel_err", 8,
                         max(abs(r["mesh_volume"] / r["vol_total"] - 1) for r in rows), 0.02))
    if "nu1" in rows[0]:
        c.append(bound_check("nu0", 9, max(col("nu0")), 1e-10))
        c.append(bound_check("nu0_vector_variation", 9, max(col("nu0_vector_variation")), 1e-6))
        c.append(slope_check("nu1_slope", 9, al, col("nu1"), n - 2 - 0.25, n - 2 + 0.25,
                             f"{n - 2} +- 0.25"))
        gap = min(r["rayleigh_bound"] - r["nu1"] for r in rows)
        c.append(bound_check("rayleigh_minus_nu1", 9, gap, 0.0, upper=False))
        c.append(variation_check("nu2_variation", 9, col("nu2"), 2.0))
        lo10 = (n - 2) / 2 - 0.2
        c.append(slope_check("sup_Sbar_minus_S_slope", 10, al, col("sup_Sbar_minus_S"), lo10,
                             target=f">= {lo10:.2f}"))
        c.append(variation_check("sigma_pairing_variation", 10, col("sigma_pairing"), 2.0))
        c.append(bound_check("psi1_integral", 11, max(abs(x) for x in col("psi1_integral")), 1e-8))
        c.append(variation_check("psi1_pairing_variation", 11, col("psi1_pairing"), 2.0))
        if "linearized_flat_err" in rows[0]:
            c.append(bound_check("linearized_flat_err", 11, max(col("linearized_flat_err")),
                                 1e-8))
    c.append(variation_check("weight_P1_variation", 12, col("weight_K1"), 2.0))
    c.append(variation_check("weight_P2_variation", 12, col("weight_C2"), 2.0))
    c.append(variation_check("weight_P5_variation", 12, col("weight_Lp"), 1.5))
    for key, label in (("weight_holder_k1", "weight_P3_k1_slope"),
                       ("weight_holder_k2", "weight_P3_k2_slope"),
                       ("weight_holder_beta", "weight_P4_slope")):
        c.append(slope_check(label, 12, eps, col(key), -beta - 0.2,
                             target=f"vs eps >= {-beta - 0.2:.2f}"))
    return c


def criterion_status(checks: list[Check]) -> dict[int, str]:
    out = {}
    for k in CRITERIA:
        cs = [c for c in checks if c.criterion == k and c.evaluated]
        if not cs:
            out[k] = INSUFFICIENT
        else:
            out[k] = PASS if all(c.passed for c in cs) else FAIL
    return out


# --- full run ---------------------------------------------------------------

@dataclass
class SweepReport:
    config: Config
    alphas: list
    neck: dict
    rows: list
    checks: list
    metadata: dict

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.evaluated)

    def to_dict(self) -> dict:
        return {"alphas": self.alphas, "config": self.config.to_dict(), "neck": self.neck,
                "rows": self.rows, "checks": [asdict(c) for c in self.checks],
                "criteria": {str(k): v for k, v in criterion_status(self.checks).items()},
                "metadata": self.metadata}


def _measure_worker(args):
    cfg, alpha, spectral = args
    return measure_alpha(cfg, alpha, spectral).values


def run(cfg: Config, alphas=None, spectral: bool = True, jobs: int = 1,
        progress=None) -> SweepReport:
    """Neck checks plus one measurement per alpha (largest first).

    If a measurement fails, the exception is re-raised with the report built
    from the alphas finished so far attached as ``partial_report``.
    """
    alphas = sorted((float(a) for a in (alphas if alphas is not None else cfg.alphas)),
                    reverse=True)
    t0 = time.perf_counter()
    nm = measure_neck(cfg)
    rows: list[dict] = []

    def assemble_report(error: str | None = None) -> SweepReport:
        checks = neck_checks(nm, cfg.n) + (sweep_checks(rows, cfg.n, cfg.beta) if rows else [])
        meta = {"version": __version__, "config_hash": cfg.hash,
                "mesh": {"sphere_level": cfg.mesh_level, "layers": cfg.layers,
                         "nodes": rows[0].get("mesh_nodes") if rows else None},
                "quad_tol": cfg.quad_tol, "eig_tol": 1e-12,
                "seconds": time.perf_counter() - t0,
                "per_alpha_seconds": [r["seconds"] for r in rows]}
        if error:
            meta["error"] = error
        return SweepReport(cfg, [r["alpha"] for r in rows] if error else alphas, nm, rows,
                           checks, meta)

    try:
        if jobs > 1 and len(alphas) > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                for row in ex.map(_measure_worker, [(cfg, a, spectral) for a in alphas]):
                    rows.append(row)
        else:
            for a in alphas:
                rows.append(measure_alpha(cfg, a, spectral).values)
                if progress:
                    progress(a, rows[-1])
    except Exception as exc:
        exc.partial_report = assemble_report(f"{type(exc).__name__}: {exc}")
        raise
    return assemble_report()


# --- report output ----------------------------------------------------------

# slope checks and the per-alpha columns they fit, for figures
SLOPE_SERIES = {
    "sup_sin_T_slope": "sup_sin_T",
    "sup_rho2E_slope": "sup_rho2E",
    "vol_neck_slope": "vol_neck_region",
    "transition_displacement_slope": "transition_displacement",
    "nu1_slope": "nu1",
    "sup_Sbar_minus_S_slope": "sup_Sbar_minus_S",
}

# wall-clock entries are left out of the CSV so reruns are byte-identical
_VOLATILE = {"seconds"}


def rows_csv(rows: list[dict]) -> str:
    keys = sorted({k for r in rows for k in r} - _VOLATILE)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        w.writerow([repr(float(r[k])) if k in r else "" for k in keys])
    return buf.getvalue()


def checks_csv(checks: list[Check]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "name", "status", "measured", "slope", "r2", "target"])
    for c in checks:
        fmt = lambda v: "" if v is None else repr(float(v))
        w.writerow([c.criterion, c.name, c.status, fmt(c.measured), fmt(c.slope), fmt(c.r2),
                    c.target])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def format_table(checks: list[Check], only_present: bool = False) -> str:
    """Human-readable table; carries the same records as the JSON report."""
    lines = [f"{'crit':>4}  {'check':<28} {'status':<12} {'measured':>13} {'r2':>7}  target"]
    for c in checks:
        m = "-" if c.measured is None else f"{c.measured:.6g}"
        r2 = "-" if c.r2 is None else f"{c.r2:.4f}"
        lines.append(f"{c.criterion:>4}  {c.name:<28} {c.status:<12} {m:>13} {r2:>7}  {c.target}")
    st = criterion_status(checks)
    lines.append("")
    for k, name in CRITERIA.items():
        if only_present and not any(c.criterion == k for c in checks):
            continue
        lines.append(f"criterion {k:>2} {st[k]:<12} {name}")
    return "\n".join(lines)


def write_report(report: SweepReport, out_dir, figures: bool = True) -> dict:
    from .plotting import loglog_svg

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "report.json", "rows": out / "samples.csv",
             "checks": out / "checks.csv", "table": out / "report.txt"}
    paths["json"].write_text(to_json(report.to_dict()))
    paths["rows"].write_text(rows_csv(report.rows))
    paths["checks"].write_text(checks_csv(report.checks))
    paths["table"].write_text(format_table(report.checks) + "\n")
    if figures and len(report.rows) >= 2:
        for c in report.checks:
            key = SLOPE_SERIES.get(c.name)
            if key is None or key not in report.rows[0]:
                continue
            x = [r["alpha"] for r in report.rows]
            y = [r[key] for r in report.rows]
            _, icpt, _ = fit_loglog(x, np.abs(y))
            p = out / f"{key}.svg"
            p.write_text(loglog_svg(x, y, c.slope, icpt, title=key, ylabel=key))
            paths[key] = p
    return paths
