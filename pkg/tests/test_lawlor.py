from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from slaglab import cache
from slaglab.errors import DimensionMismatch, InfeasibleTargets, RadiusTooSmall
from slaglab.geometry import frame_calibration, omega_residual
from slaglab.lawlor import (LawlorNeck, asymptotic_graph, get_neck, match_angles, measure_C0,
                            poly_P, theta, theta_infinity)
from slaglab.pipeline import fd_metric
from slaglab.symplectic import apply_J, characteristic_angles, real_matrix

a_vec = st.lists(st.floats(0.3, 4.0), min_size=3, max_size=3).map(np.array)


def theta_oracle(a, lam):
    """theta_k by scipy's QUADPACK, independent of the in-repo quadrature."""
    P = lambda s: (np.prod(1 + a * s * s) - 1) / (s * s) if s != 0 else np.sum(a)
    return np.array([-integrate.quad(lambda s: 1 / ((1 / ak + s * s) * np.sqrt(P(s))), 0, lam,
                                     epsabs=1e-14, epsrel=1e-13, limit=200)[0] for ak in a])


def test_poly_P_matches_definition():
    a = np.array([0.5, 2.0, 3.0])
    s = np.array([0.1, 1.0, 7.0])
    direct = (np.prod(1 + a * s[:, None] ** 2, axis=1) - 1) / s ** 2
    assert np.allclose(poly_P(a, s), direct, rtol=1e-12)


@pytest.mark.parametrize("a", [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0), (0.4, 0.4, 5.0)])
def test_theta_against_independent_quadrature(a):
    a = np.array(a)
    for lam in (0.3, 1.0, 4.0, 25.0):
        assert np.allclose(theta(a, lam), theta_oracle(a, lam), atol=1e-11)
    assert np.allclose(theta(a, -2.0), -theta(a, 2.0))


def test_equal_weights_give_equal_plane_angles():
    # symmetric case: the three angles coincide and sum to pi
    assert np.allclose(get_neck((1, 1, 1)).plane_angles(), np.pi / 3, atol=1e-12)
    assert np.allclose(theta_infinity((2.0, 2.0, 2.0)), -np.pi / 6, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(a_vec)
def test_plane_angles_sum_to_pi(a):
    neck = LawlorNeck(a, tol=1e-12)
    assert neck.plane_angles().sum() == pytest.approx(np.pi, abs=1e-9)


def test_tail_bound_dominates_tail():
    neck = get_neck((1.0, 2.0, 3.0))
    lam = np.array([2.0, 5.0, 20.0, 100.0])
    err = np.abs(neck.theta(lam) - neck.theta_inf)
    assert np.all(err <= neck.tail_bound(lam)[:, None] * (1 + 1e-9))


@settings(max_examples=15, deadline=None)
@given(a_vec, st.floats(-6, 6), st.integers(0, 1000))
def test_neck_is_special_lagrangian(a, lam, seed):
    neck = LawlorNeck(a, tol=1e-12)
    mu = np.random.default_rng(seed).normal(size=(8, 3))
    mu /= np.linalg.norm(mu, axis=1, keepdims=True)
    L = np.full(8, lam)
    Z = neck.tangents_complex(L, mu)
    re, im = frame_calibration(Z)
    assert np.max(np.abs(im)) < 1e-10
    assert np.allclose(re, 1.0, atol=1e-10)
    assert np.max(omega_residual(real_matrix(Z))) < 1e-10


@settings(max_examples=15, deadline=None)
@given(a_vec, st.integers(0, 1000))
def test_metric_formula_matches_finite_differences(a, seed):
    neck = LawlorNeck(a, tol=1e-12)
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-3, 3, 10)
    mu = rng.normal(size=(10, 3))
    mu /= np.linalg.norm(mu, axis=1, keepdims=True)
    G = neck.induced_metric(lam, mu)
    assert np.allclose(G, fd_metric(neck, lam, mu), rtol=1e-7, atol=1e-8)


def test_asymptotic_planes_match_far_tangents():
    neck = get_neck((1.0, 2.0, 3.0))
    B1, B2 = neck.asymptotic_planes()
    mu = np.array([0.6, 0.0, 0.8])
    for lam, B in ((1e6, B1), (-1e6, B2)):
        T = neck.tangents(np.array(lam), mu)
        T = T / np.linalg.norm(T, axis=0)
        P = B @ B.T
        assert np.max(np.abs(T - P @ T)) < 1e-6
    pair = characteristic_angles(B1, B2)
    assert pair.angles.sum() == pytest.approx(np.pi, abs=1e-10)


def test_graph_reproduces_embedding():
    neck = get_neck((1.0, 2.0, 3.0))
    B1 = neck.asymptotic_planes()[0]
    N1 = apply_J(B1)
    rng = np.random.default_rng(3)
    mu = rng.normal(size=(20, 3))
    mu /= np.linalg.norm(mu, axis=1, keepdims=True)
    lam = rng.uniform(1.0, 6.0, 20)
    s, t = neck.graph_coordinates(lam, mu)
    g, grad, H = neck.asymptotic_graph(s)
    assert np.allclose(grad, t, atol=1e-12)
    assert np.allclose(s @ B1.T + grad @ N1.T, neck.embed(lam, mu), atol=1e-10)
    assert np.allclose(H, np.swapaxes(H, 1, 2), atol=1e-9)


def test_graph_derivatives_by_finite_differences():
    neck = get_neck((1.0, 1.0, 1.0))
    s = np.array([[2.0, 0.5, -1.0], [0.3, 3.0, 1.0]])
    g, grad, H = neck.asymptotic_graph(s)
    h = 1e-5
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        gp, tp, _ = neck.asymptotic_graph(s + e)
        gm, tm, _ = neck.asymptotic_graph(s - e)
        assert np.allclose((gp - gm) / (2 * h), grad[:, k], atol=1e-8)
        assert np.allclose((tp - tm) / (2 * h), H[:, :, k], atol=1e-7)


def test_ends_are_antipodal():
    s = np.array([[2.0, 1.0, 0.0]])
    e1 = asymptotic_graph((1, 1, 1), 1, s)
    e2 = asymptotic_graph((1, 1, 1), 2, s)
    assert np.array_equal(e2.g, -e1.g) and np.array_equal(e2.hess, -e1.hess)
    with pytest.raises(ValueError):
        asymptotic_graph((1, 1, 1), 3, s)
    with pytest.raises(RadiusTooSmall):
        get_neck((1, 1, 1)).asymptotic_graph(np.array([[0.1, 0.0, 0.0]]))


def test_decay_rates():
    neck = get_neck((1.0, 1.0, 1.0))
    r = np.geomspace(2 * neck.R0, 20 * neck.R0, 6)
    u = np.array([0.36, 0.48, 0.8])
    g, t, _ = neck.asymptotic_graph(r[:, None] * u)
    assert np.polyfit(np.log(r), np.log(np.linalg.norm(t, axis=1)), 1)[0] == pytest.approx(-2, abs=0.02)
    assert np.polyfit(np.log(r), np.log(np.abs(g)), 1)[0] == pytest.approx(-1, abs=0.02)


def test_measured_decay_constant_is_frozen():
    assert measure_C0(get_neck((1.0, 1.0, 1.0))) == pytest.approx(4.2774, rel=1e-4)


@settings(max_examples=6, deadline=None)
@given(a_vec)
def test_match_angles_round_trip(a):
    res = match_angles(LawlorNeck(a, tol=1e-13).plane_angles())
    assert np.allclose(res.a, a / a.min(), rtol=1e-6)


def test_match_angles_rejects_bad_targets():
    with pytest.raises(InfeasibleTargets):
        match_angles([1.0, 1.0, 1.0])
    with pytest.raises(InfeasibleTargets):
        match_angles([np.pi, 0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        match_angles([np.pi])


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        get_neck((1, 1, 1)).embed(0.0, np.ones(2))


def test_table_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv(cache.ENV_VAR, str(tmp_path))
    a, tol = (1.0, 1.5, 2.5), 1e-12
    assert cache.load_table(a, tol) is None
    neck = LawlorNeck(np.array(a), tol=tol)
    cache.store_table(a, tol, neck.table)
    files = list(tmp_path.glob("neck-*.json"))
    assert len(files) == 1
    again = LawlorNeck(np.array(a), tol=tol, table=cache.load_table(a, tol))
    lam = np.linspace(-30, 30, 41)
    assert np.array_equal(again.theta(lam), neck.theta(lam))
    files[0].write_text("{not json")
    assert cache.load_table(a, tol) is None
