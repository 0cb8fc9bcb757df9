from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import eigsh

from slaglab.errors import EigSolverNonConvergence
from slaglab.fem import MassSolver, assemble, cell_gradients, smallest_eigenpairs
from slaglab.mesh import (cylinder_mesh, flat_annulus_mesh, graded_positions, icosphere,
                          sphere_mesh)


def arpack(K, M, k):
    """Reference eigenvalues from ARPACK shift-invert, used only as an oracle."""
    vals = eigsh(K, k=k, M=M, sigma=-1e-3, which="LM", return_eigenvectors=False)
    return np.sort(vals)


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_icosphere_counts(level):
    v, f = icosphere(level)
    assert len(v) == 10 * 4 ** level + 2
    assert len(f) == 20 * 4 ** level
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)


def test_sphere_area_error_drops_by_four():
    errs = [abs(sphere_mesh(l).volume() - 4 * np.pi) for l in (2, 3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_flat_annulus_volume():
    m = flat_annulus_mesh(3, 0.2, 1.0, 16)
    exact = 4 / 3 * np.pi * (1 - 0.2 ** 3)
    assert m.volume() == pytest.approx(exact, rel=0.01)
    assert m.boundary_volume() == pytest.approx(4 * np.pi * (1 + 0.04), rel=0.02)


def test_sphere_first_eigenvalue():
    K, M = assemble(sphere_mesh(3))
    res = smallest_eigenpairs(K, M, k=5)
    assert abs(res.values[0]) < 1e-10
    assert np.allclose(res.values[1:4], 2.0, rtol=0.02)
    assert res.values[4] == pytest.approx(6.0, rel=0.03)
    assert np.allclose(res.values, arpack(K, M, 5), rtol=1e-10, atol=1e-12)


def test_cylinder_neumann_eigenvalue():
    L = 4.0
    K, M = assemble(cylinder_mesh(L, 64, 64))
    nu = smallest_eigenpairs(K, M, k=4).values
    # modes: 0, (pi/L)^2 < 1, then the angular pair at 1
    assert nu[1] == pytest.approx((np.pi / L) ** 2, rel=0.02)
    assert np.allclose(nu, arpack(K, M, 4), rtol=1e-10, atol=1e-12)


def test_eigenvectors_are_mass_orthonormal():
    K, M = assemble(sphere_mesh(2))
    res = smallest_eigenpairs(K, M, k=6)
    G = res.vectors.T @ (M @ res.vectors)
    assert np.allclose(G, np.eye(6), atol=1e-10)
    R = K @ res.vectors - (M @ res.vectors) * res.values
    assert np.max(np.abs(R)) < 1e-8
    assert np.all(res.residuals <= 1e-12)


def test_eigensolver_reports_nonconvergence():
    K, M = assemble(sphere_mesh(2))
    with pytest.raises(EigSolverNonConvergence):
        smallest_eigenpairs(K, M, k=6, max_iter=1)
    with pytest.raises(ValueError):
        smallest_eigenpairs(K, M, k=0)


def test_stiffness_annihilates_constants_and_integrates_gradients():
    m = sphere_mesh(2)
    K, M = assemble(m)
    one = np.ones(len(m.points))
    assert np.max(np.abs(K @ one)) < 1e-12
    assert one @ (M @ one) == pytest.approx(m.volume())
    # for a linear ambient function the P1 gradient is its tangential projection
    u = m.points @ np.array([1.0, 2.0, -1.0])
    g = cell_gradients(m, u)
    P = m.points[m.cells].mean(axis=1)
    nrm = np.cross(*(np.swapaxes(m.cell_geometry()[0], 1, 2)[:, i] for i in (0, 1)))
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    assert np.max(np.abs(np.sum(g * nrm, axis=1))) < 1e-12
    assert np.all(np.sum(P * nrm, axis=1) != 0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_mass_solver_inverts_mass_matrix(seed):
    K, M = assemble(sphere_mesh(2))
    b = np.random.default_rng(seed).normal(size=M.shape[0])
    x = MassSolver(M)(b)
    assert np.linalg.norm(M @ x - b) <= 1e-12 * np.linalg.norm(b)
    assert np.array_equal(MassSolver(M)(np.zeros(3 * 0 + M.shape[0])), np.zeros(M.shape[0]))


@settings(max_examples=20)
@given(st.floats(0.5, 10), st.floats(1e-3, 0.1), st.integers(4, 40))
def test_graded_positions(total, first, cells):
    x = graded_positions(total, first, cells)
    assert len(x) == cells + 1 and x[0] == 0 and x[-1] == pytest.approx(total)
    d = np.diff(x)
    assert np.all(d > 0)
    assert np.all(np.diff(d) >= -1e-12 * total)
