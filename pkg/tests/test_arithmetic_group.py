import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shimura_fm import arithmetic_group as ag
from shimura_fm.errors import DomainError
from shimura_fm.genus_audit import elliptic_formula, group_orders
from shimura_fm.quat_algebra import maximal_order, standard_order

O6 = standard_order(6)


def naive_box(O, norm, h):
    """Oracle: scan the box element by element with exact arithmetic."""
    out = set()
    for c in itertools.product(range(-h, h + 1), repeat=4):
        if any(c) and O.element(c).reduced_norm() == norm:
            first = next(v for v in c if v)
            out.add(tuple(v if first > 0 else -v for v in c))
    return sorted(out)


@pytest.mark.parametrize("d,norm,h", [(6, 1, 2), (6, 5, 2), (10, 1, 2), (22, -1, 2), (6, -2, 1)])
def test_enumeration_matches_naive_scan(d, norm, h):
    O = standard_order(d)
    got = [tuple(int(v) for v in c) for c in ag.enumerate_coords(O, norm, h)]
    assert got == naive_box(O, norm, h)


def test_arithmetic_tensor_matches_exact():
    ar = ag.arithmetic(O6)
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, y = rng.integers(-6, 7, 4), rng.integers(-6, 7, 4)
        exact = O6.element(x) * O6.element(y)
        assert [int(v) for v in O6.coords(exact)] == list(ar.mul(x, y))
        assert ar.norm(x) == O6.element(x).reduced_norm()
        assert ar.trace(x) == O6.element(x).reduced_trace()


def test_group_element_sign_and_matrix():
    u = ag.units(O6, 2)[0]
    assert u.norm == 1
    assert ag.GroupElement.from_coords(O6, [-c for c in u.coords]) == u
    assert np.isclose(np.linalg.det(u.matrix), 1)
    assert (u * u.inverse()).rep == O6.algebra.one


@pytest.mark.parametrize("p", [5, 7])
def test_congruence_elements_reduce_to_scalars(p):
    els = ag.congruence_elements(O6, p, 30)
    assert els
    assert ag.congruence_filter(els, p) == els


@pytest.mark.parametrize("p", [5, 7])
def test_trace_law_and_min_trace(p):
    # every +1 mod p representative has tr = 2 mod p^2; the box minimum is p^2 - 2
    assert ag.congruence_trace_law(O6, p, 30) == []
    assert ag.min_congruence_trace(O6, p, 30) == p * p - 2


def test_congruence_coords_equal_filtered_box():
    h, p = 12, 5
    box = ag.units(O6, h)
    one = tuple(int(v) for v in ag.normalize_sign(ag.arithmetic(O6).one)[0])
    filt = {g.coords for g in ag.congruence_filter(box, p)} - {one}
    fast = {tuple(int(v) for v in c) for c in ag.congruence_coords(O6, p, h)}
    assert fast == filt


@given(st.integers(3, 200))
def test_displacement_closed_form_vs_grid(t):
    assert ag.displacement_lower(t) == pytest.approx(ag.min_displacement_numeric(t), abs=2e-2)


def test_displacement_of_small_traces_rejected():
    with pytest.raises(DomainError):
        ag.displacement_lower(2)


@pytest.mark.parametrize("p", [5, 7, 11])
def test_displacement_exceeds_two_log_p(p):
    assert ag.displacement_lower(p * p - 2) >= 2 * math.log(p) - 1e-9


def test_torsion_kinds():
    for g in ag.torsion_elements(O6, "order4", 4):
        assert g.trace == 0 and g.rep * g.rep == -O6.algebra.one
    x = ag.torsion_elements(O6, "order6", 4)[0].rep
    assert abs(x.reduced_trace()) == 1
    assert (x * x * x).is_scalar()
    with pytest.raises(ValueError):
        ag.torsion_coords(O6, "order5", 3)


@pytest.mark.parametrize("d", [6, 10, 22])
def test_elliptic_counts_match_local_formula(d):
    heights = {6: (12, 6), 10: (12, 6), 22: (40, 15)}[d]
    assert ag.elliptic_class_counts(standard_order(d), *heights) == elliptic_formula(d)


def test_elliptic_counts_split_case():
    # SL_2(Z): one class of order 4 and one of order 6 points
    assert ag.elliptic_class_counts(maximal_order(1, 1), 4, 4) == (1, 1)


def test_component_structure():
    cs5, cs7 = ag.component_structure(O6, 5), ag.component_structure(O6, 7)
    assert (cs5.copies, cs7.copies) == (2, 1)
    assert cs7.witness.reduced_norm() == -1


@pytest.mark.parametrize("d,p", [(6, 5), (6, 7), (10, 5), (22, 11), (22, 13)])
def test_reduction_image_matches_strong_approximation(d, p):
    O = standard_order(d)
    image = ag.reduction_image(O, ag.unit_generators(O, 3), p)
    assert len(image) == ag.norm_one_image_order(O, p)
    if d % p:
        assert len(image) == group_orders(p)["psl2"]


def test_congruent_to_pm_one_agrees_with_split_test():
    p = 7
    box = ag.units(O6, 10)
    coords = np.array([g.coords for g in box])
    split = ag.split_mod_p(O6, p)
    assert np.array_equal(ag.congruent_to_pm_one(O6, coords, p),
                          ag.is_congruent_to_identity(split, coords))
