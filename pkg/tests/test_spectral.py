from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse.linalg as sla

from slaglab.errors import DimensionMismatch
from slaglab.gluing import ExteriorPiece, glue
from slaglab.spectral import GluedSpectrum, MeshConfig, collar_cutoff, neck_profile

SMALL = MeshConfig(level=2, layers=32, first_dlam=0.4)


@pytest.fixture(scope="module")
def sp():
    return GluedSpectrum(glue((1, 1, 1), 0.1), SMALL)


@pytest.fixture(scope="module")
def sp_curved():
    S = glue((1, 1, 1), 0.1, pieces=(ExteriorPiece.random_cubic(3, 0.3, 1),
                                      ExteriorPiece.random_cubic(3, 0.3, 2)))
    return GluedSpectrum(S, SMALL)


def test_lowest_eigenvalue_is_zero_and_gap_is_small(sp):
    nu = sp.nu
    assert abs(nu[0]) < 1e-10
    assert 0 < nu[1] < nu[2]
    # the neck is a bottleneck: nu_1 sits far below nu_2
    assert nu[1] < 0.2 * nu[2]
    assert nu[1] <= sp.rayleigh_test_bound()
    assert np.max(sp.eig.residuals) < 1e-8


def test_eigenvalues_match_arpack(sp):
    vals = sla.eigsh(sp.K.tocsc(), k=4, M=sp.M.tocsc(), sigma=-1e-3, which="LM",
                     return_eigenvectors=False)
    assert np.allclose(np.sort(vals)[1:], sp.nu[1:4], rtol=1e-8)


def test_poincare_inequality_on_complement(sp):
    """u orthogonal to 1 and S has Rayleigh quotient at least nu_2."""
    rng = np.random.default_rng(0)
    one = np.ones(len(sp.mesh.points)) / np.sqrt(sp.volume)
    S = sp.S1
    for _ in range(5):
        u = rng.standard_normal(len(one))
        for e in (one, S):
            u = u - sp.inner(u, e) * e
        q = float(u @ (sp.K @ u)) / sp.inner(u, u)
        assert q >= sp.nu[2] * (1 - 1e-9)


def test_approximate_eigenfunction(sp):
    f = sp.fields()
    assert sp.inner(f.S, f.S) == pytest.approx(1.0, abs=1e-10)
    assert abs(sp.inner(f.S_bar, np.ones_like(f.S_bar))) < 1e-10
    assert sp.inner(f.S_bar, f.S) == pytest.approx(1.0, abs=1e-10)
    r = np.linalg.norm(sp.mesh.points, axis=1)
    far = r >= sp.S.delta
    assert np.allclose(np.abs(f.sigma[far]), 1.0)
    assert np.all(np.abs(f.sigma) <= 1.0 + 1e-12)
    assert f.sigma_pairing > 0
    # the approximation is close in relative sup norm
    assert np.max(np.abs(f.S_bar - f.S)) < 0.5 * np.max(np.abs(f.S))


def test_neck_profile_is_odd_and_monotone(sp):
    lam = np.linspace(-30, 30, 121)
    h = neck_profile(sp.S.neck, lam)
    assert np.allclose(h, -h[::-1], atol=1e-12)
    assert np.all(np.diff(h) > 0)
    assert abs(h[-1] - 1) < 0.05


def test_psi1_integral_and_green_identity(sp):
    f = sp.fields()
    assert abs(np.sum(f.psi1_weak)) < 1e-8
    assert np.sum(sp.B @ f.v_boundary) == pytest.approx(0.0, abs=1e-10)
    pairing = float(f.S @ f.psi1_weak)
    green = float(f.S @ (sp.B @ f.v_boundary)) + sp.nu[1] * sp.inner(f.v_e, f.S)
    assert pairing == pytest.approx(green, rel=1e-8)


def test_collar_cutoff():
    t = np.array([0.0, 0.25, 0.5, 1.0, 2.0])
    assert np.allclose(collar_cutoff(t), [1, 1, 1, 0, 0])


def test_linearized_operator_flat(sp):
    u = np.cos(3 * sp.mesh.points[:, 0])
    ext = sp.mesh.labels["zone"] == "exterior"
    lin = sp.linearized_apply(u, a=0.7)
    assert np.allclose(lin[ext], sp.laplacian(u)[ext] + 0.7, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        sp.linearized_apply(np.zeros(3))


def test_linearized_operator_terms(sp_curved):
    s = sp_curved
    n = len(s.mesh.points)
    theta, H = s.node_geometry
    assert np.allclose(s.linearized_apply(np.ones(n)), 0.0, atol=1e-8)
    assert np.allclose(s.linearized_apply(np.zeros(n), a=1.0), np.cos(theta))
    assert np.allclose(s.linearized_apply(np.zeros(n), b=1.0), s.psi1)
    # for u = <c, x> the surface gradient is the tangential part c_T, and since
    # JH is tangent, <H, J c_T> = <H, J c>: the first-order term is explicit
    c = np.array([0.3, -0.2, 0.5, 0.1, 0.4, -0.6])
    u = s.mesh.points @ c
    Jc = np.concatenate([-c[3:], c[:3]])
    expect = np.cos(theta) * s.laplacian(u) - np.sin(theta) * (H @ Jc)
    g = s.gradient(u)
    Jg = np.concatenate([-g[:, 3:], g[:, :3]], axis=1)
    direct = np.cos(theta) * s.laplacian(u) - np.sin(theta) * np.sum(H * Jg, axis=1)
    assert np.allclose(s.linearized_apply(u), direct, atol=1e-12)
    assert np.max(np.abs(direct - expect)) < 0.1 * max(1.0, np.max(np.abs(expect)))


def test_refinement_stability():
    """nu_1 and nu_2 move by a few percent under one level of mesh refinement."""
    S = glue((1, 1, 1), 0.2)
    coarse = GluedSpectrum(S, SMALL).nu
    fine = GluedSpectrum(S, MeshConfig(level=3, layers=32, first_dlam=0.4)).nu
    assert abs(coarse[1] / fine[1] - 1) < 0.03
    assert abs(coarse[2] / fine[2] - 1) < 0.03
