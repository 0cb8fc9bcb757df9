from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from slaglab.errors import QuadratureNonConvergence
from slaglab.quadrature import (HalfLineIntegral, adaptive_quad, composite_gauss,
                                sphere_area, sphere_quadrature)


def test_adaptive_quad_polynomial_and_vector_valued():
    v, e = adaptive_quad(lambda x: np.stack([x ** 5, np.exp(x)], axis=-1), 0.0, 1.0)
    assert v[0] == pytest.approx(1 / 6, abs=1e-14)
    assert v[1] == pytest.approx(np.e - 1, abs=1e-14)
    assert e < 1e-12


def test_adaptive_quad_handles_endpoint_singularity():
    v, _ = adaptive_quad(lambda x: 1 / np.sqrt(x), 0.0, 1.0, tol=1e-10, max_intervals=5000)
    assert v[0] == pytest.approx(2.0, abs=1e-8)


def test_adaptive_quad_budget():
    with pytest.raises(QuadratureNonConvergence):
        adaptive_quad(lambda x: np.sin(1 / x), 1e-6, 1.0, tol=1e-15, max_intervals=10)


def test_half_line_integral_of_lorentzian():
    F = HalfLineIntegral(lambda s: 1 / (1 + s ** 2), L=2.0, h=0.25)
    x = np.array([-50.0, -3.0, -0.5, 0.0, 0.7, 2.0, 2.5, 1e3, 1e6])
    assert np.allclose(F(x)[:, 0], np.arctan(x), atol=1e-13)
    assert F.total[0] == pytest.approx(np.pi / 2, abs=1e-13)


def test_half_line_state_round_trip_is_exact():
    f = lambda s: np.stack([1 / (1 + s ** 2), 1 / (1 + s ** 2) ** 2], axis=-1)
    F = HalfLineIntegral(f, L=2.0, h=0.25)
    G = HalfLineIntegral(f, L=2.0, h=0.25, state=F.state())
    x = np.linspace(-9, 9, 37)
    assert np.array_equal(F(x), G(x))


def test_composite_gauss_matches_scipy():
    f = lambda x: np.cos(3 * x) * np.exp(-x)
    ref = integrate.quad(f, 0, 4, epsabs=1e-14)[0]
    assert composite_gauss(f, 0.0, 4.0, 8) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.integers(3, 8))
def test_sphere_rule_weights_and_second_moments(n, order):
    pts, w = sphere_quadrature(n, order)
    area = sphere_area(n)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert w.sum() == pytest.approx(area, rel=1e-12)
    # int x_i x_j = delta_ij |S| / n, and odd moments vanish
    M2 = (pts * w[:, None]).T @ pts
    assert np.allclose(M2, np.eye(n) * area / n, atol=1e-12)
    assert np.allclose(w @ pts, 0.0, atol=1e-12)


def test_sphere_area_values():
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)
    assert sphere_area(4) == pytest.approx(2 * np.pi ** 2)
