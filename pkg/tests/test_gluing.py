from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slaglab.errors import (AlphaTooLarge, ChartDomainError, ParameterInconsistency,
                            PlaneMismatch, ResolutionInfeasible)
from slaglab.geometry import annulus_samples, omega_residual
from slaglab.gluing import (ExteriorPiece, build_surface, cutoff_eta, glue, radial_cutoff,
                            select_parameters, smoothstep)
from slaglab.lawlor import get_neck


@pytest.fixture(scope="module")
def flat():
    return glue((1, 1, 1), 0.1)


@pytest.fixture(scope="module")
def curved():
    pieces = (ExteriorPiece.random_cubic(3, 0.3, seed=1), ExteriorPiece.random_cubic(3, 0.3, seed=2))
    return glue((1, 1, 1), 0.1, pieces=pieces)


def test_parameter_selection_formula():
    p = select_parameters(0.1, K=1.0, C0=4.0, R0=np.sqrt(2), n=3)
    assert p.delta == pytest.approx(0.1)
    assert p.eps == pytest.approx(0.1 ** (4 / 3) / (2 * 4.0 ** (1 / 3)))
    assert p.neck_outer == pytest.approx(p.eps * np.sqrt(2))


def test_parameter_errors():
    with pytest.raises(AlphaTooLarge):
        select_parameters(0.5, 1.0, 4.0, 1.4, 3)
    with pytest.raises(ResolutionInfeasible):
        select_parameters(1e-5, 1.0, 4.0, 1.4, 3)
    with pytest.raises(ParameterInconsistency):
        select_parameters(-0.1, 1.0, 4.0, 1.4, 3)
    with pytest.raises(ParameterInconsistency):
        select_parameters(0.1, 1.0, -4.0, 1.4, 3)


@settings(max_examples=30)
@given(st.floats(0.05, 0.95))
def test_smoothstep_derivatives(u):
    h = 1e-6
    S = lambda v: smoothstep(np.array([v]))
    s, d1, d2, _ = S(u)
    assert 0 <= s[0] <= 1
    assert d1[0] == pytest.approx((S(u + h)[0][0] - S(u - h)[0][0]) / (2 * h), rel=1e-5, abs=1e-7)
    assert d2[0] == pytest.approx((S(u + h)[1][0] - S(u - h)[1][0]) / (2 * h), rel=1e-4, abs=1e-5)


def test_smoothstep_symmetry_and_plateaus():
    u = np.linspace(-0.5, 1.5, 401)
    s = smoothstep(u)[0]
    assert np.all(s[u <= 0] == 0.0) and np.all(s[u >= 1] == 1.0)
    assert np.allclose(s + smoothstep(1 - u)[0], 1.0, atol=1e-15)
    assert np.all(np.diff(s) >= 0)


def test_cutoff_is_exact_outside_transition():
    d = 0.1
    x = annulus_samples(0.001, 0.2, 60, 3, 4)
    e, g, H = cutoff_eta(x, d)
    r = np.linalg.norm(x, axis=1)
    assert np.all(e[r <= d / 2] == 1.0) and np.all(e[r >= d] == 0.0)
    assert np.all(g[r >= d] == 0.0)
    # radial derivatives against finite differences
    rr = np.linspace(0.051, 0.099, 17)
    e0, e1, e2, _ = radial_cutoff(rr, d)
    h = 1e-7
    assert np.allclose(e1, (radial_cutoff(rr + h, d)[0] - radial_cutoff(rr - h, d)[0]) / (2 * h),
                       rtol=1e-5, atol=1e-3)


@pytest.mark.parametrize("surface", ["flat", "curved"])
def test_graph_agrees_with_neck_inside_and_pieces_outside(surface, request):
    S = request.getfixturevalue(surface)
    inner = annulus_samples(S.params.neck_outer * 1.01, 0.5 * S.delta, 8, 3, 4)
    outer = annulus_samples(S.delta, 1.0, 8, 3, 4)
    for side in (1, 2):
        assert np.array_equal(S.graph_point(side, inner), S.neck_graph_chart(side, inner))
        piece = S.pieces[side - 1]
        direct = outer @ S.planes[side - 1].T + piece.grad(outer) @ S.normals[side - 1].T
        assert np.array_equal(S.exterior_chart(side, outer), direct)


@pytest.mark.parametrize("surface", ["flat", "curved"])
def test_transition_graph_is_lagrangian(surface, request):
    S = request.getfixturevalue(surface)
    x = annulus_samples(0.5 * S.delta, S.delta, 12, 3, 6)
    for side in (1, 2):
        hF = S.graph_function(side, x)[2]
        assert np.max(np.abs(hF - np.swapaxes(hF, 1, 2))) < 1e-12
        assert np.max(omega_residual(S.graph_tangents(side, hF))) < 1e-12


def test_neck_points_project_onto_graph(flat):
    S = flat
    mu = np.array([[0.0, 0.6, 0.8], [1.0, 0.0, 0.0]])
    lam = S.lambda_at_radius(mu, 0.3 * S.delta)
    for sg, side in ((1.0, 1), (-1.0, 2)):
        p = S.neck_point(sg * lam, mu)
        x = S.project(side, p)
        assert np.allclose(np.linalg.norm(x, axis=1), 0.3 * S.delta, rtol=1e-12)
        assert np.max(np.abs(S.neck_graph_chart(side, x) - p)) < 1e-12


def test_chart_domain_and_planes(flat):
    with pytest.raises(ChartDomainError):
        flat.graph_function(1, np.array([[1e-6, 0.0, 0.0]]))
    with pytest.raises(ChartDomainError):
        flat.exterior_chart(1, np.array([[0.5 * flat.delta, 0.0, 0.0]]))
    B1, B2 = get_neck((1, 1, 1)).asymptotic_planes()
    with pytest.raises(PlaneMismatch):
        glue((1, 1, 1), 0.1, planes=(B2, B1))
    glue((1, 1, 1), 0.1, planes=(B1, B2))


def test_measured_K_floors_the_constant(curved):
    Km = max(p.measured_K() for p in curved.pieces)
    assert curved.params.K == pytest.approx(max(1.0, Km))
    big = (ExteriorPiece.random_cubic(3, 5.0, 1), ExteriorPiece.flat(3))
    S = glue((1, 1, 1), 0.1, pieces=big)
    assert S.params.K == pytest.approx(big[0].measured_K())


def test_build_surface_checks_consistency(flat):
    neck = get_neck((2.0, 2.0, 2.0))  # different waist radius
    with pytest.raises(ParameterInconsistency):
        build_surface(ExteriorPiece.flat(3), ExteriorPiece.flat(3), neck, flat.params)
    with pytest.raises(ParameterInconsistency):
        build_surface(ExteriorPiece.flat(2), ExteriorPiece.flat(3), flat.neck, flat.params)
    S = build_surface(ExteriorPiece.flat(3), ExteriorPiece.flat(3), flat.neck, flat.params)
    assert S.eps == flat.eps


def test_orientation_signs_make_planes_calibrated(flat):
    from slaglab.symplectic import complex_matrix
    for B, s in zip(flat.planes, flat.signs):
        d = s * np.linalg.det(complex_matrix(B))
        assert d.real == pytest.approx(1.0) and abs(d.imag) < 1e-12
