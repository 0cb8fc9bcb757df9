from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slaglab.errors import ParameterInconsistency
from slaglab.geometry import (REGIONS, SurfaceGeometry, Weight, annulus_samples, cutoff_bound,
                              graph_angle, graph_calibration, holder_seminorm_1d,
                              lagrangian_angle, mean_curvature, residual, volume, weight_rho)
from slaglab.gluing import ExteriorPiece, glue


@pytest.fixture(scope="module")
def flat():
    return glue((1, 1, 1), 0.1)


@pytest.fixture(scope="module")
def curved():
    return glue((1, 1, 1), 0.1, pieces=(ExteriorPiece.random_cubic(3, 0.3, 1),
                                         ExteriorPiece.random_cubic(3, 0.3, 2)))


sym3 = st.lists(st.floats(-20, 20), min_size=6, max_size=6)


def _sym(c):
    A = np.zeros((3, 3))
    A[np.triu_indices(3)] = c
    return A + np.triu(A, 1).T


@settings(max_examples=60)
@given(sym3)
def test_graph_angle_matches_unit_phase(c):
    A = _sym(c)
    re, im = graph_calibration(A)
    th = graph_angle(A)
    assert re == pytest.approx(np.cos(th), abs=1e-9)
    assert im == pytest.approx(np.sin(th), abs=1e-9)
    assert abs(th) < 1.5 * np.pi


@pytest.mark.parametrize("side", [1, 2])
def test_frame_and_graph_phases_agree(curved, side):
    x = annulus_samples(0.3 * curved.delta, 0.9, 10, 3, 4)
    s = lagrangian_angle(curved, side, x, curvature=False)
    assert np.allclose(s.re_dz, np.cos(s.theta), atol=1e-13)
    assert np.allclose(s.im_dz, np.sin(s.theta), atol=1e-13)
    assert np.allclose(s.re_dz ** 2 + s.im_dz ** 2, 1.0, atol=1e-13)


def test_neck_is_calibrated_and_minimal(flat):
    mu = np.array([[1.0, 0, 0], [0, 0.6, 0.8]])
    lam = np.array([0.0, 1.5])
    s = lagrangian_angle(flat, "neck", (lam, mu))
    assert np.allclose(s.theta, 0.0, atol=1e-13)
    assert np.max(np.abs(s.mean_curvature)) < 1e-6
    with pytest.raises(ValueError):
        lagrangian_angle(flat, 3, np.zeros((1, 3)))


def test_flat_exterior_has_zero_residual_and_curvature(flat):
    x = annulus_samples(flat.delta, 1.0, 6, 3, 4)
    s = lagrangian_angle(flat, 1, x)
    assert np.max(np.abs(s.im_dz)) < 1e-15
    assert np.max(np.abs(s.mean_curvature)) == 0.0


def test_mean_curvature_is_J_gradient_of_angle(curved):
    # finite-difference oracle along a line through the transition annulus
    d = curved.delta
    u = np.array([0.6, 0.0, 0.8])
    t = np.array([0.7 * d])
    H = mean_curvature(curved, 1, t[:, None] * u)
    h = 1e-6 * d
    geom = SurfaceGeometry(curved)
    dth = (geom.graph_theta(1, (t + h)[:, None] * u) - geom.graph_theta(1, (t - h)[:, None] * u)) / (2 * h)
    # <H, J dX/dt> = -<J grad theta, J T u> ... = -d theta/dt up to the chart metric
    T = geom.graph_tangents(1, t[:, None] * u)[0]
    Tu = T @ u
    JTu = np.concatenate([-Tu[3:], Tu[:3]])
    assert float(H[0] @ JTu) == pytest.approx(float(dth[0]), rel=1e-4)


def test_region_volumes(flat):
    d = flat.delta
    vol = SurfaceGeometry(flat).volumes()
    assert vol["exterior"] == pytest.approx(2 * 4 / 3 * np.pi * (1 - d ** 3), rel=1e-10)
    assert vol["total"] == pytest.approx(vol["exterior"] + vol["transition"] + vol["neck_core"])
    assert vol["error"] < 1e-6
    # the neck region is a small perturbation of two flat balls of radius delta
    assert vol["neck_region"] == pytest.approx(2 * 4 / 3 * np.pi * d ** 3, rel=0.05)
    for r in REGIONS:
        assert volume(flat, r) > 0
    with pytest.raises(ValueError):
        volume(flat, "nowhere")


def test_neck_volume_density_approaches_cone(flat):
    """Volume of the scaled neck in a ball grows like two flat discs."""
    geom = SurfaceGeometry(flat)
    S = flat
    ratios = []
    for k in (3.0, 6.0, 12.0):
        rad = k * S.params.neck_outer
        import dataclasses
        params = dataclasses.replace(S.params, delta=2 * rad)
        from slaglab.gluing import GluedSurface
        sub = GluedSurface(S.neck, params, S.pieces)
        v = SurfaceGeometry(sub).neck_core_volume(nl=48, order=10)
        ratios.append(v / (2 * 4 / 3 * np.pi * rad ** 3))
    assert all(0.9 < r < 1.5 for r in ratios)
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)
    assert geom is not None


def test_residual_zones(flat):
    W = weight_rho(flat, 0.1)
    R = residual(flat, W, nr=12, order=4, n_lam=8)
    assert R.sup("exterior") == 0.0
    assert R.sup("neck") < 1e-14
    assert 0 < R.sup("transition") < 1
    assert R.weighted_sup <= R.sup("transition")
    assert R.sup("missing") == 0.0


@pytest.mark.parametrize("profile", ["linear", "log"])
def test_weight_plateaus_and_monotonicity(flat, profile):
    W = weight_rho(flat, 0.1, profile=profile)
    r = np.geomspace(1e-6, 1.0, 4000)
    rho = W.rho(r)
    assert np.all(rho[r <= W.r_in] == W.R * W.eps)
    assert np.all(rho[r >= W.r_out] == W.R)
    assert np.all(np.diff(rho) >= -1e-13)
    mid = np.linspace(W.r_in * 1.01, W.r_out * 0.99, 300)
    h = 1e-7
    fd = (W.rho(mid + h) - W.rho(mid - h)) / (2 * h)
    assert np.allclose(W.drho(mid), fd, rtol=1e-5, atol=1e-6)


def test_weight_gradient_and_linear_growth_bounds(flat):
    W = weight_rho(flat, 0.1)
    r = np.geomspace(W.r_in, W.r_out, 2000)
    # |rho'| <= K eps^-beta and rho >= C r, with K and C of order one
    assert np.max(np.abs(W.drho(r))) * W.eps ** W.beta < 3.0
    assert np.min(W.rho(r) / r) > 0.1


def test_weight_rejects_bad_parameters():
    with pytest.raises(ParameterInconsistency):
        Weight(eps=0.5, beta=0.1, a=10.0).check()
    with pytest.raises(ParameterInconsistency):
        Weight(eps=0.01, beta=0.1, a=1.0, profile="cubic").check()


def test_holder_seminorm_1d():
    r = np.linspace(0, 1, 101)
    assert holder_seminorm_1d(r, 3 * r, 1.0) == pytest.approx(3.0)
    assert holder_seminorm_1d(r, np.sqrt(r), 0.5) == pytest.approx(1.0)


def test_cutoff_bound_scale_invariant():
    assert cutoff_bound(0.1) == pytest.approx(cutoff_bound(0.01), rel=1e-2)
