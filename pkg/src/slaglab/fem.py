"""P1 finite elements on embedded simplicial meshes and the generalised eigenproblem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import cg, splu

from .errors import EigSolverNonConvergence
from .mesh import SurfaceMesh, facet_volumes


def _scatter(cells: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    k = cells.shape[1]
    rows = np.repeat(cells, k, axis=1).ravel()
    cols = np.tile(cells, (1, k)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble(mesh: SurfaceMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Stiffness K and consistent mass M; K is the nonnegative Laplacian form."""
    E, G, vol, Ginv = mesh.cell_geometry()
    k = mesh.dim
    D = np.concatenate([-np.ones((k, 1)), np.eye(k)], axis=1)  # (k, k+1)
    Kl = vol[:, None, None] * np.einsum("ia,mij,jb->mab", D, Ginv, D)
    Ml = vol[:, None, None] * (np.ones((k + 1, k + 1)) + np.eye(k + 1)) / ((k + 1) * (k + 2))
    n = len(mesh.points)
    K = _scatter(mesh.cells, Kl, n)
    M = _scatter(mesh.cells, Ml, n)
    K = 0.5 * (K + K.T)
    return K.tocsr(), M.tocsr()


def boundary_mass(mesh: SurfaceMesh, mask=None) -> sp.csr_matrix:
    f = mesh.boundary if mask is None else mesh.boundary[mask]
    k = f.shape[1] - 1
    vol = facet_volumes(mesh.points, f)
    Bl = vol[:, None, None] * (np.ones((k + 1, k + 1)) + np.eye(k + 1)) / ((k + 1) * (k + 2))
    return _scatter(f, Bl, len(mesh.points))


def cell_gradients(mesh: SurfaceMesh, u: np.ndarray) -> np.ndarray:
    """Ambient gradient of the P1 interpolant of u on each cell, shape (m, d)."""
    E, G, vol, Ginv = mesh.cell_geometry()
    du = u[mesh.cells[:, 1:]] - u[mesh.cells[:, :1]]
    return np.einsum("mdi,mij,mj->md", E, Ginv, du)


def nodal_average(mesh: SurfaceMesh, cellvals: np.ndarray) -> np.ndarray:
    """Volume-weighted average of cell quantities onto nodes."""
    vol = mesh.cell_geometry()[2]
    n = len(mesh.points)
    w = np.zeros(n)
    np.add.at(w, mesh.cells.ravel(), np.repeat(vol, mesh.cells.shape[1]))
    shape = (n,) + cellvals.shape[1:]
    acc = np.zeros(shape)
    vals = np.repeat(cellvals * vol.reshape((-1,) + (1,) * (cellvals.ndim - 1)),
                     mesh.cells.shape[1], axis=0)
    np.add.at(acc, mesh.cells.ravel(), vals)
    return acc / w.reshape((-1,) + (1,) * (cellvals.ndim - 1))


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int = 0


def smallest_eigenpairs(K: sp.spmatrix, M: sp.spmatrix, k: int = 8,
                        shift: float | None = None, tol: float = 1e-12,
                        block: int | None = None, max_iter: int = 400,
                        seed: int = 0) -> EigenResult:
    """Lowest k pairs of K x = nu M x by shift-invert subspace iteration.

    The shift sits just below zero so that K - shift*M is positive definite
    and the constant mode converges alongside the small eigenvalues.  Each
    sweep applies (K - shift M)^{-1} M to a block of ``block`` vectors and
    re-diagonalises with a Rayleigh-Ritz step; iteration stops once every
    wanted pair has backward error below ``tol``.  Vectors are M-orthonormal.
    """
    n = K.shape[0]
    if k < 1 or k >= n:
        raise ValueError(f"need 1 <= k < {n}, got {k}")
    if shift is None:
        scale = K.diagonal().sum() / M.diagonal().sum()
        shift = -1e-3 * min(1.0, scale)
    p = min(n, block or max(2 * k, k + 8))
    try:
        # K - shift*M is SPD, so symmetric ordering without pivoting is safe
        lu = splu((K - shift * M).tocsc(), permc_spec="MMD_AT_PLUS_A",
                  diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise EigSolverNonConvergence(f"shifted operator is singular: {exc}") from exc
    normK = sp.linalg.norm(K, 1)
    normM = sp.linalg.norm(M, 1)
    X = np.random.default_rng(seed).standard_normal((n, p))
    X[:, 0] = 1.0
    for it in range(1, max_iter + 1):
        Y = lu.solve(M @ X)
        Q, _ = np.linalg.qr(Y)
        A = Q.T @ (K @ Q)
        B = Q.T @ (M @ Q)
        vals, C = eigh(0.5 * (A + A.T), 0.5 * (B + B.T))
        X = Q @ C
        R = K @ X[:, :k] - (M @ X[:, :k]) * vals[:k]
        res = np.linalg.norm(R, axis=0) / (
            (normK + np.abs(vals[:k]) * normM) * np.linalg.norm(X[:, :k], axis=0))
        if np.all(res <= tol):
            break
    else:
        raise EigSolverNonConvergence(
            f"{max_iter} sweeps, worst backward error {res.max():.2e} > {tol:.1e}")
    vecs = X[:, :k]
    vecs = vecs / np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
    return EigenResult(values=vals[:k], vectors=vecs, residuals=res, iterations=it)


class MassSolver:
    """Solves with the consistent mass matrix by Jacobi-preconditioned CG.

    The P1 mass matrix is spectrally equivalent to its diagonal, so a few
    dozen iterations reach round-off independent of the mesh size.
    """

    def __init__(self, M: sp.spmatrix, rtol: float = 1e-14, max_iter: int = 2000):
        self.M = M.tocsr()
        self._P = sp.diags(1.0 / self.M.diagonal())
        self.rtol = rtol
        self.max_iter = max_iter

    def __call__(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if not np.any(b):
            return np.zeros_like(b)
        x, info = cg(self.M, b, rtol=self.rtol, atol=0.0, M=self._P, maxiter=self.max_iter)
        if info != 0:
            raise EigSolverNonConvergence(f"mass solve did not converge (info={info})")
        return x
