"""Spectral analysis of the glued surface: Neumann eigenpairs and derived fields.

The Laplacian is the nonnegative operator, discretised as M^{-1} K with P1
elements; boundaries carry natural (Neumann) conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DegenerateProjection, DimensionMismatch, ResolutionInfeasible
from .fem import (EigenResult, MassSolver, assemble, boundary_mass, cell_gradients,
                  nodal_average, smallest_eigenpairs)
from .geometry import SurfaceGeometry, graph_angle
from .gluing import GluedSurface, cutoff_eta, smoothstep
from .lawlor import LawlorNeck
from .mesh import SurfaceMesh, glued_mesh
from .quadrature import HalfLineIntegral, sphere_quadrature


@dataclass(frozen=True)
class MeshConfig:
    level: int = 3
    layers: int = 64
    first_dlam: float = 0.4
    collar: float = 0.2  # width of the boundary collar for v_e, relative to radius 1
    n_eig: int = 8


@lru_cache(maxsize=8)
def _profile_integral(a: tuple, order: int = 8) -> HalfLineIntegral:
    from .lawlor import get_neck
    neck = get_neck(a)
    pts, ws = sphere_quadrature(neck.n, order)
    ws = ws / ws.sum()

    def w(lam):
        lam = np.asarray(lam, dtype=float)
        L = np.broadcast_to(lam[..., None], lam.shape + (len(pts),))
        g = neck.induced_metric(L, np.broadcast_to(pts, L.shape + (neck.n,)))
        flux = np.sqrt(np.linalg.det(g)) / g[..., 0, 0]
        return 1.0 / (flux @ ws)

    return HalfLineIntegral(w, L=2.0 / np.sqrt(neck.A), h=0.25 / np.sqrt(neck.a.max()), tol=1e-11)


def neck_profile(neck: LawlorNeck, lam) -> np.ndarray:
    """Odd, increasing profile on the neck, harmonic for the sphere-averaged metric, -> +-1."""
    I = _profile_integral(tuple(float(v) for v in neck.a))
    lam = np.asarray(lam, dtype=float)
    uq, inv = np.unique(lam.ravel(), return_inverse=True)
    vals = np.concatenate([I(uq[i:i + 128])[..., 0] for i in range(0, len(uq), 128)])
    return (vals[inv] / I.total[0]).reshape(lam.shape)


def build_mesh(surface: GluedSurface, cfg: MeshConfig = MeshConfig()) -> SurfaceMesh:
    return glued_mesh(surface, cfg.level, cfg.layers, cfg.first_dlam)


def neumann_eigs(K, M, count: int = 8, tol: float = 1e-12) -> EigenResult:
    """Lowest ``count`` Neumann eigenpairs (natural boundary conditions, no rows modified)."""
    if count < 3:
        raise ValueError("need at least three eigenpairs (nu_0, nu_1, nu_2)")
    return smallest_eigenpairs(K, M, k=count, tol=tol)


@dataclass(frozen=True)
class EigenFields:
    """Nodal fields attached to the first nontrivial eigenfunction."""

    S: np.ndarray
    S_bar: np.ndarray
    sigma: np.ndarray
    sigma_pairing: float  # <sigma, S>
    psi0: np.ndarray
    psi1: np.ndarray
    psi1_weak: np.ndarray
    v_boundary: np.ndarray
    v_e: np.ndarray


def collar_cutoff(t) -> np.ndarray:
    """1 on [0, 1/2], 0 on [1, inf), smooth in between."""
    return 1.0 - smoothstep(2.0 * np.asarray(t, dtype=float) - 1.0)[0]


class GluedSpectrum:
    """Mesh, matrices, eigenpairs and derived fields for one glued surface."""

    def __init__(self, surface: GluedSurface, cfg: MeshConfig = MeshConfig()):
        self.S = surface
        self.cfg = cfg
        self.mesh: SurfaceMesh = build_mesh(surface, cfg)
        self.K, self.M = assemble(self.mesh)
        self.B = boundary_mass(self.mesh)
        self.geom = SurfaceGeometry(surface)

    # --- basic quantities ---------------------------------------------------

    @cached_property
    def eig(self) -> EigenResult:
        return neumann_eigs(self.K, self.M, self.cfg.n_eig)

    @property
    def nu(self) -> np.ndarray:
        return self.eig.values

    @cached_property
    def mass_solve(self) -> MassSolver:
        return MassSolver(self.M)

    @cached_property
    def volume(self) -> float:
        return float(self.M.sum())

    def inner(self, u, v) -> float:
        return float(u @ (self.M @ v))

    @cached_property
    def node_side_sign(self) -> np.ndarray:
        lab = self.mesh.labels
        s = np.where(lab["side"] == 1, 1.0, np.where(lab["side"] == 2, -1.0, 0.0))
        return s

    @cached_property
    def S1(self) -> np.ndarray:
        """Mass-normalised first nonconstant eigenfunction, positive on side 1."""
        v = self.eig.vectors[:, 1].copy()
        b1 = self.boundary_nodes[0]
        if v[b1].mean() < 0:
            v = -v
        return v

    # --- node-wise geometry -------------------------------------------------

    @cached_property
    def node_geometry(self) -> tuple[np.ndarray, np.ndarray]:
        """Lagrangian angle and mean curvature vector at every node."""
        lab = self.mesh.labels
        n_nodes = len(self.mesh.points)
        theta = np.zeros(n_nodes)
        H = np.zeros((n_nodes, 2 * self.S.n))
        neck = np.isfinite(lab["lam"])
        mu = lab["sphere"]
        if np.any(neck):
            theta[neck] = self.geom.neck_theta(lab["lam"][neck], mu[neck])
            H[neck] = self.geom.neck_mean_curvature(lab["lam"][neck], mu[neck])
        for sd in (1, 2):
            m = (~neck) & (lab["side"] == sd)
            x = lab["x"][m]
            theta[m] = graph_angle(self.S.graph_function(sd, x)[2])
            H[m] = self.geom.graph_mean_curvature(sd, x)
        return theta, H

    # --- test functions -----------------------------------------------------

    @cached_property
    def sigma(self) -> np.ndarray:
        """+-1 function following the neck's harmonic profile, exactly +-1 on |x| >= delta."""
        lab = self.mesh.labels
        out = self.node_side_sign.copy()
        neck = np.isfinite(lab["lam"])
        out[neck] = neck_profile(self.S.neck, lab["lam"][neck])
        for sd, sg in ((1, 1.0), (2, -1.0)):
            m = (~neck) & (lab["side"] == sd)
            idx = np.where(m)[0]
            x = lab["x"][idx]
            eta = cutoff_eta(x, self.S.delta)[0]
            act = eta > 0
            if np.any(act):
                lam, _ = self.S.neck.solve_lambda(x[act] / self.S.eps)
                h = neck_profile(self.S.neck, lam)
                out[idx[act]] = sg * (eta[act] * h + (1 - eta[act]))
        return out

    @cached_property
    def step_test_function(self) -> np.ndarray:
        """+-1 away from the neck, 0 near its core, gradient of order 1/delta."""
        r = np.linalg.norm(self.mesh.points, axis=1) / self.S.delta
        core = self.node_side_sign == 0
        if np.any(r[core] > 0.25):
            raise ResolutionInfeasible("neck core not inside the quarter ball")
        return self.node_side_sign * smoothstep((r - 0.25) / 0.75)[0]

    def rayleigh_test_bound(self) -> float:
        u = self.step_test_function
        u = u - self.inner(u, np.ones_like(u)) / self.volume
        return float(u @ (self.K @ u)) / self.inner(u, u)

    def approximate_eigenfunction(self, tol: float = 1e-8) -> tuple[np.ndarray, float]:
        """(S_bar, <sigma, S>) with S_bar = (sigma - mean) / <sigma, S>."""
        sg = self.sigma
        pair = self.inner(sg, self.S1)
        if pair < tol:
            raise DegenerateProjection(f"<sigma, S> = {pair:.3g} is not bounded away from zero")
        mean = self.inner(sg, np.ones_like(sg)) / self.volume
        return (sg - mean) / pair, pair

    def fields(self) -> EigenFields:
        S_bar, pair = self.approximate_eigenfunction()
        return EigenFields(S=self.S1, S_bar=S_bar, sigma=self.sigma, sigma_pairing=pair,
                           psi0=self.psi0, psi1=self.psi1, psi1_weak=self.psi1_weak,
                           v_boundary=self.boundary_value, v_e=self.v_e)

    # --- boundary data ------------------------------------------------------

    @cached_property
    def boundary_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        lab = self.mesh.labels
        b = self.mesh.boundary
        return (np.unique(b[lab["boundary_side"] == 1]), np.unique(b[lab["boundary_side"] == 2]))

    @cached_property
    def boundary_volumes(self) -> tuple[float, float]:
        lab = self.mesh.labels
        return (self.mesh.boundary_volume(lab["boundary_side"] == 1),
                self.mesh.boundary_volume(lab["boundary_side"] == 2))

    @cached_property
    def boundary_value(self) -> np.ndarray:
        """v = 1/Vol(dM_1) on dM_1 and -1/Vol(dM_2) on dM_2 (zero elsewhere)."""
        v = np.zeros(len(self.mesh.points))
        b1, b2 = self.boundary_nodes
        V1, V2 = self.boundary_volumes
        v[b1] = 1.0 / V1
        v[b2] = -1.0 / V2
        return v

    @cached_property
    def collar_distance(self) -> np.ndarray:
        """Distance to the boundary measured along the axial mesh lines."""
        lab = self.mesh.labels
        nv = lab["nv"]
        P = self.mesh.points.reshape(-1, nv, self.mesh.points.shape[1])
        seg = np.linalg.norm(np.diff(P, axis=0), axis=2)
        up = np.concatenate([np.cumsum(seg[::-1], axis=0)[::-1], np.zeros((1, nv))])
        down = np.concatenate([np.zeros((1, nv)), np.cumsum(seg, axis=0)])
        half = P.shape[0] // 2
        s1 = np.where(np.arange(P.shape[0])[:, None] >= half, up, down)
        return s1.ravel()

    @cached_property
    def v_e(self) -> np.ndarray:
        s1 = self.collar_distance
        w2 = self.cfg.collar
        side = np.where(self.node_side_sign >= 0, 1.0, -1.0)
        V1, V2 = self.boundary_volumes
        v = np.where(side > 0, 1.0 / V1, -1.0 / V2)
        return v * s1 * collar_cutoff(s1 / w2)

    @cached_property
    def psi1_weak(self) -> np.ndarray:
        """Load vector of psi_1 = -Delta v_e including its boundary flux."""
        return self.K @ self.v_e + self.B @ self.boundary_value

    @cached_property
    def psi1(self) -> np.ndarray:
        return self.mass_solve(self.psi1_weak)

    @cached_property
    def psi0(self) -> np.ndarray:
        return np.cos(self.node_geometry[0])

    # --- linearised operator ------------------------------------------------

    def laplacian(self, u) -> np.ndarray:
        """Nonnegative Laplacian M^{-1} K u."""
        return self.mass_solve(self.K @ u)

    def gradient(self, u) -> np.ndarray:
        return nodal_average(self.mesh, cell_gradients(self.mesh, u))

    def linearized_apply(self, u, a: float = 0.0, b: float = 0.0) -> np.ndarray:
        """cos(theta) L u - sin(theta) <H, J grad u> + a cos(theta) + b psi_1.

        L is the nonnegative Laplacian, so on a flat piece this is L u + a.
        """
        u = np.asarray(u, dtype=float)
        if u.shape != (len(self.mesh.points),):
            raise DimensionMismatch(f"expected {len(self.mesh.points)} nodal values, got {u.shape}")
        theta, H = self.node_geometry
        g = self.gradient(u)
        n = g.shape[1] // 2
        Jg = np.concatenate([-g[:, n:], g[:, :n]], axis=1)
        return (np.cos(theta) * self.laplacian(u) - np.sin(theta) * np.sum(H * Jg, axis=1)
                + a * np.cos(theta) + b * self.psi1)
