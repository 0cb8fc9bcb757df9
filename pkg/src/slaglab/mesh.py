"""Simplicial meshes of embedded manifolds: icospheres and cylinder product meshes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateProjection, ResolutionInfeasible


def icosphere(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit icosphere: vertices (10*4^level + 2, 3) and outward-oriented triangles."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    faces = f
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(verts), np.array(faces, dtype=np.int64)


def prism_tets(tri: np.ndarray, nv: int, nlayers: int) -> np.ndarray:
    """Split triangle x interval prisms into tetrahedra conformingly.

    Vertices of each triangle are sorted by index; with that ordering the
    diagonal chosen on every quadrilateral face is shared by both neighbours.
    """
    t = np.sort(tri, axis=1)
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    out = []
    for j in range(nlayers):
        o0, o1 = j * nv, (j + 1) * nv
        out.append(np.stack([a + o0, b + o0, c + o0, c + o1], axis=1))
        out.append(np.stack([a + o0, b + o0, b + o1, c + o1], axis=1))
        out.append(np.stack([a + o0, a + o1, b + o1, c + o1], axis=1))
    return np.concatenate(out)


@dataclass
class SurfaceMesh:
    """Simplicial mesh of a k-manifold embedded in R^d.

    ``cells`` are (m, k+1) vertex indices and ``boundary`` holds (b, k) boundary
    facets.  Per-node labels carry the chart data used to evaluate fields.
    """

    points: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    labels: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.cells.shape[1] - 1

    def cell_geometry(self):
        """Edge matrices E (m, d, k), Gram G = E^T E, volumes, and G^{-1}."""
        P = self.points[self.cells]
        E = np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)
        G = np.einsum("mdi,mdj->mij", E, E)
        det = np.linalg.det(G)
        if np.any(det <= 0):
            raise DegenerateProjection(f"{np.sum(det <= 0)} degenerate cells")
        k = self.dim
        vol = np.sqrt(det) / np.prod(np.arange(1, k + 1))
        return E, G, vol, np.linalg.inv(G)

    def volume(self) -> float:
        return float(np.sum(self.cell_geometry()[2]))

    def boundary_volume(self, mask=None) -> float:
        f = self.boundary if mask is None else self.boundary[mask]
        return float(np.sum(facet_volumes(self.points, f)))


def facet_volumes(points: np.ndarray, facets: np.ndarray) -> np.ndarray:
    P = points[facets]
    E = np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)
    G = np.einsum("mdi,mdj->mij", E, E)
    k = facets.shape[1] - 1
    return np.sqrt(np.linalg.det(G)) / np.prod(np.arange(1, k + 1))


def sphere_mesh(level: int, radius: float = 1.0) -> SurfaceMesh:
    v, f = icosphere(level)
    return SurfaceMesh(points=radius * v, cells=f)


def cylinder_mesh(length: float, n_circ: int, n_axial: int) -> SurfaceMesh:
    """Flat cylinder [0, L] x S^1 (unit radius) embedded in R^3."""
    ang = 2 * np.pi * np.arange(n_circ) / n_circ
    z = np.linspace(0.0, length, n_axial + 1)
    pts = np.stack([np.tile(np.cos(ang), n_axial + 1), np.tile(np.sin(ang), n_axial + 1),
                    np.repeat(z, n_circ)], axis=1)
    cells = []
    for j in range(n_axial):
        for i in range(n_circ):
            a, b = j * n_circ + i, j * n_circ + (i + 1) % n_circ
            c, d = a + n_circ, b + n_circ
            cells += [(a, b, d), (a, d, c)]
    bnd = [(i, (i + 1) % n_circ) for i in range(n_circ)]
    bnd += [(n_axial * n_circ + i, n_axial * n_circ + (i + 1) % n_circ) for i in range(n_circ)]
    return SurfaceMesh(points=pts, cells=np.array(cells), boundary=np.array(bnd))


def flat_annulus_mesh(level: int, r_in: float, r_out: float, layers: int,
                      ambient: int = 6) -> SurfaceMesh:
    """Annulus r_in <= |x| <= r_out in R^3, placed in R^ambient by zero padding."""
    u, tri = icosphere(level)
    r = np.linspace(r_in, r_out, layers + 1)
    pts = np.concatenate([ri * u for ri in r])
    pts = np.concatenate([pts, np.zeros((len(pts), ambient - 3))], axis=1)
    cells = prism_tets(tri, len(u), layers)
    bnd = np.concatenate([tri, tri + layers * len(u)])
    return SurfaceMesh(points=pts, cells=cells, boundary=bnd,
                       labels={"side": np.ones(len(pts), int), "radius": np.repeat(r, len(u))})


def graded_positions(total: float, first: float, cells: int) -> np.ndarray:
    """cells+1 positions 0 = l_0 < ... < l_N = total, geometric growth from ``first``."""
    if first * cells >= total:
        return np.linspace(0.0, total, cells + 1)
    f = lambda k: (np.expm1(k / cells)) / np.expm1(k) - first / total
    kap = brentq(f, 1e-9, 200.0)
    return total * np.expm1(kap * np.arange(cells + 1) / cells) / np.expm1(kap)


def glued_mesh(surface, level: int = 3, layers: int = 64, first_dlam: float = 0.4,
               min_core_cells: int = 8) -> SurfaceMesh:
    """Product mesh of S^{n-1} x [-1, 1] conforming to the zones of a glued surface.

    Axial nodes follow a pseudo arclength l: l = eps*lam on the neck and
    l = l_seam + (r - r_seam) on the graph zones, graded geometrically from the
    neck centre.  Requires n = 3.
    """
    if surface.n != 3:
        raise ResolutionInfeasible("product meshes are only implemented for n = 3")
    if layers % 2:
        raise ResolutionInfeasible("layer count must be even")
    eps, delta = surface.eps, surface.delta
    R0 = surface.params.R0
    u, tri = icosphere(level)
    nv = len(u)
    r_seam = min(2.0 * eps * R0, 0.5 * (eps * R0 + 0.5 * delta))
    lam_seam = float(np.max(surface.lambda_at_radius(u, r_seam)))
    l_seam = eps * lam_seam
    half = layers // 2
    ell = graded_positions(l_seam + (1.0 - r_seam), first_dlam * eps, half)
    core = np.sum(ell[1:] <= eps * surface.lambda_at_radius(u[:1], 0.5 * delta)[0])
    if 2 * core < min_core_cells:
        raise ResolutionInfeasible(f"only {2 * core} cells across the neck core")

    pts = np.empty(((2 * half + 1) * nv, 2 * surface.n))
    side = np.zeros(len(pts), int)
    lam_l = np.full(len(pts), np.nan)
    xs = np.full((len(pts), surface.n), np.nan)
    zone = np.empty(len(pts), dtype=object)
    layer_of = np.repeat(np.arange(-half, half + 1), nv)
    for sgn, sd in ((1.0, 1), (-1.0, 2)):
        lam_star = sgn * lam_seam
        rho_star = surface.neck_plane_radius(np.full(nv, lam_star), u)
        x_star = surface.project(sd, surface.neck_point(np.full(nv, lam_star), u))
        d_u = x_star / np.linalg.norm(x_star, axis=1, keepdims=True)
        for j in range(0 if sd == 1 else 1, half + 1):
            row = (half + int(sgn) * j) * nv
            sl = slice(row, row + nv)
            l = ell[j]
            side[sl] = sd if j > 0 else 0
            if l <= l_seam:
                lam = sgn * l / eps
                pts[sl] = surface.neck_point(np.full(nv, lam), u)
                lam_l[sl] = lam
                zone[sl] = "neck"
            else:
                r = r_seam + (l - l_seam)
                w = (r - r_seam) / (1.0 - r_seam)
                rho = r + (rho_star - r_seam) * (1.0 - w)
                x = rho[:, None] * d_u
                if j == half:
                    x = d_u  # outer boundary exactly on the unit sphere
                xs[sl] = x
                pts[sl] = surface.graph_point(sd, x)
                rad = np.linalg.norm(x, axis=1)
                zone[sl] = np.where(rad >= delta, "exterior",
                                    np.where(rad >= 0.5 * delta, "transition", "neck"))
    cells = prism_tets(tri, nv, 2 * half)
    bnd = np.concatenate([tri, tri + 2 * half * nv])
    bside = np.concatenate([np.full(len(tri), 2), np.full(len(tri), 1)])
    return SurfaceMesh(points=pts, cells=cells, boundary=bnd,
                       labels={"side": side, "lam": lam_l, "x": xs, "zone": zone,
                               "layer": layer_of, "sphere": np.tile(u, (2 * half + 1, 1)),
                               "boundary_side": bside, "nv": nv, "ell": ell,
                               "lam_seam": lam_seam, "r_seam": r_seam})
