import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shimura_fm.errors import ConvergenceError, DomainError
from shimura_fm.hyperbolic_geom import (CURV1, CURV2, CURV4, HPoint, Normalization, ParamCurve,
                                        PotentialF, ProductPoint, cayley, cayley_inv,
                                        complex_hessian, conjugate_tube, curve_volume,
                                        diagonal_tube, disk_ball_area, disk_dist, dist,
                                        fiber_curve, graph_neg_z, lelong_estimate, moebius,
                                        omega_std, potential_S_zw, product_ball, psi,
                                        real_to_disk_matrix, rotation_matrix, translation_matrix)

radii = st.floats(0, 0.9)
angles = st.floats(0, 2 * math.pi)


def disk_points():
    return st.builds(lambda r, t: r * cmath.exp(1j * t), radii, angles)


def su11():
    # a rotation composed with a translation covers a generic disk automorphism
    return st.builds(lambda ell, t: rotation_matrix(t) @ translation_matrix(ell),
                     st.floats(-2, 2), angles)


@given(disk_points(), disk_points(), su11())
def test_distance_invariant_under_isometries(z, w, g):
    assert disk_dist(moebius(g, z), moebius(g, w)) == pytest.approx(disk_dist(z, w), abs=1e-7)


@given(st.floats(-3, 3), st.floats(0.1, 3))
def test_cayley_roundtrip(x, y):
    z = complex(x, y)
    assert cayley_inv(cayley(z)) == pytest.approx(z, abs=1e-9)
    assert abs(cayley(z)) < 1


@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(-3, 3), st.floats(0.1, 3))
def test_uhp_and_disk_distances_agree(a, b, c, d):
    z, w = HPoint(complex(a, b), "UHP"), HPoint(complex(c, d), "UHP")
    assert dist(z, w) == pytest.approx(dist(z.to_disk(), w.to_disk()), rel=1e-6, abs=1e-8)


def test_real_matrix_conjugated_to_disk():
    M = np.array([[2, 1], [1, 1]], dtype=float)
    D = real_to_disk_matrix(M)
    z = HPoint(0.3 + 1.2j, "UHP")
    via_uhp = HPoint((2 * z.value + 1) / (z.value + 1), "UHP").to_disk().value
    assert moebius(D, z.to_disk().value) == pytest.approx(via_uhp)


def test_models_and_validation():
    with pytest.raises(DomainError):
        HPoint(1.2)
    with pytest.raises(DomainError):
        HPoint(-1j, "UHP")
    with pytest.raises(ValueError):
        HPoint(0, "Klein")
    with pytest.raises(DomainError):
        dist(HPoint(0), HPoint(1j, "UHP"))
    with pytest.raises(ValueError):
        Normalization(3)


def test_normalization_scales():
    z, w = HPoint(0), HPoint(0.5)
    d1 = dist(z, w)
    assert dist(z, w, CURV4) == pytest.approx(d1 / 2)
    assert Normalization.from_tag("curvature-2") == CURV2
    # the same set has the same area in every curvature once radii are rescaled
    assert disk_ball_area(1.0, CURV2) == pytest.approx(disk_ball_area(math.sqrt(2), CURV1) / 2)


@pytest.mark.parametrize("rho", [0.3, 1.0])
def test_fiber_volume_in_ball_is_disk_area(rho):
    # the fibre {0} x D meets the product ball about the origin in a disk ball
    vol = curve_volume(fiber_curve(radius=0.999), product_ball(ProductPoint.disk(0, 0), rho))
    assert vol.value == pytest.approx(disk_ball_area(rho), rel=3e-3)


def test_diag_tube_of_graph_is_bounded_region():
    # d(z, -z) = 2 d(0, z) < r  iff  |z| < tanh(r/4); the volume is the area of that ball
    r = 1.0
    vol = curve_volume(graph_neg_z(), diagonal_tube(r))
    area_each = disk_ball_area(r / 2)
    assert vol.value == pytest.approx(2 * area_each, rel=3e-3)


def test_volume_refinement_failure_reports():
    jagged = lambda z, w: np.sin(400 * w.real) > 0  # noqa: E731
    with pytest.raises(ConvergenceError):
        curve_volume(fiber_curve(), jagged, max_refine=1, rtol=1e-9)


def test_psi_is_conj_distance():
    z, w = HPoint(0.2 + 0.1j), HPoint(0.3 - 0.2j)
    # psi = tanh^2(d(z, conj w)/2)
    d = dist(z, HPoint(w.value.conjugate()))
    assert psi(z, w) == pytest.approx(math.tanh(d / 2) ** 2)
    assert conjugate_tube(1.0)(np.array(z.value), np.array(w.value)) == pytest.approx(1 - d)


def F_closed_form(F, s):
    """Closed antiderivative of the middle band profile."""
    c, K = F.c, F.K
    at = lambda t: math.atan(math.sqrt(math.expm1(t)))  # noqa: E731
    return c + ((s - c) - 2 * math.sqrt(math.expm1(c)) * (at(s) - at(c))) / K


@pytest.mark.parametrize("r,R", [(0.3, 1.0), (0.5, 2.0), (0.05, 0.4)])
def test_middle_band_matches_closed_form(r, R):
    F = PotentialF(r, R)
    for s in np.linspace(F.c, F.C, 9)[1:]:
        assert F.h(s) == pytest.approx(F_closed_form(F, s), abs=1e-9)


def test_potential_bands():
    F = PotentialF(0.3, 1.0)
    assert F.h_prime(F.C) == pytest.approx(1.0)  # C^1 at the outer seam
    assert F.h_prime(F.c) == pytest.approx(0.0)
    s = np.array([F.c / 2, F.C + 0.5, F.C + 2])
    out = F.of_s(s)
    assert out[0] == F.c
    assert out[2] - out[1] == pytest.approx(1.5)
    with pytest.raises(DomainError):
        PotentialF(1.0, 0.5)


def test_hessian_of_S_is_half_the_product_form():
    at = ProductPoint.disk(0.2 + 0.1j, 0.3 - 0.2j)
    H = complex_hessian(potential_S_zw, at)
    assert np.allclose(2 * H.matrix, omega_std(at).matrix, atol=1e-6)
    assert H.hermitian_defect() < 1e-8


def test_hessian_of_F_by_band():
    F = PotentialF(0.3, 1.0)
    outer = ProductPoint.disk(0.9, 0.1j)
    assert np.allclose(complex_hessian(F, outer).matrix,
                       complex_hessian(potential_S_zw, outer).matrix, atol=1e-5)
    inner = ProductPoint.disk(0.05, 0.02)
    assert np.allclose(complex_hessian(F, inner).matrix, 0, atol=1e-6)
    middle = ProductPoint.disk(0.3, 0.0)
    assert complex_hessian(F, middle).eigenvalues().min() > -1e-6
    with pytest.raises(DomainError):
        complex_hessian(F, ProductPoint.disk(math.tanh(0.15), 0))


def test_lelong_numbers():
    log_sq = lambda y: np.log(np.abs(y[:, 0]) ** 2)  # noqa: E731
    est = lelong_estimate(log_sq, np.array([0j]))
    assert est.singular and est.value == pytest.approx(2, abs=1e-6)
    smooth = lambda y: np.abs(y[:, 0]) ** 2 + 1  # noqa: E731
    assert not lelong_estimate(smooth, np.array([0j])).singular


def test_curve_json_roundtrip():
    c = graph_neg_z()
    back = ParamCurve.from_json(c.to_json())
    assert back.to_json() == c.to_json()
    z1, w1 = c.points(8)
    z2, w2 = back.points(8)
    assert np.allclose(z1, z2) and np.allclose(w1, w2)
