import json
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shimura_fm.errors import DomainError
from shimura_fm.hyperbolic_geom import (CURV1, CURV2, CURV4, ProductPoint, fiber_curve,
                                        graph_conj, graph_neg_z, translation_matrix)
from shimura_fm.volume_bounds import (BudgetConstants, conj_ratio_bound, csch, csch2,
                                      curve_zoo, graph_hecke_intersections, ht_diagonal_bound,
                                      ht_hecke_bound, ht_point_bound, incidence_budget_minus,
                                      incidence_budget_plus, load_zoo, resolve_normalization,
                                      verify_conj_ratio, verify_diagonal_bound,
                                      verify_hecke_bound, verify_point_bound, zoo_cells, zoo_for)


def graph_neg_z_ball_area(r, curvature):
    """Oracle: (z, -z) lies in the product ball iff sqrt(2) d(0, z) < r.

    The graph is isometric to the disk scaled by sqrt(2), so its area is twice
    a disk ball of radius r / sqrt(2), all in the chosen curvature.
    """
    s = math.sqrt(curvature)  # curvature -k distances are d_1 / sqrt(k)
    rho1 = r * s / math.sqrt(2)
    return 2 * 4 * math.pi * math.sinh(rho1 / 2) ** 2 / curvature


@pytest.mark.parametrize("n", [CURV1, CURV2, CURV4])
def test_point_harness_against_graph_oracle(n):
    rep = verify_point_bound(graph_neg_z(), ProductPoint.disk(0, 0), 1.0, normalization=n)
    assert rep.measured_value == pytest.approx(graph_neg_z_ball_area(1.0, n.curvature), rel=3e-3)


def test_point_bound_sharp_only_in_curvature_two():
    res = resolve_normalization("point")
    assert [k for k, v in res.items() if v["equality"]] == ["curvature-2"]


def test_diag_bound_sharp_in_curvature_one():
    res = resolve_normalization("diag")
    assert [k for k, v in res.items() if v["equality"]] == ["curvature-1"]


def test_conj_ratio_sharp_in_curvature_one():
    rep = verify_conj_ratio(graph_conj(), 0.3, 0.6)
    assert rep.notes["sharp_under"] == ["curvature-1"]
    assert rep.measured_value == pytest.approx(conj_ratio_bound(0.3, 0.6), rel=1e-3)


def test_closed_forms():
    assert ht_point_bound(2.0, 3) == pytest.approx(12 * math.pi * math.sinh(1) ** 2)
    assert ht_diagonal_bound(4.0) == pytest.approx(8 * math.pi * math.sinh(1) ** 2)
    assert ht_hecke_bound(1.0, 5, 2) == ht_diagonal_bound(1.0, 2)


def test_conj_ratio_bound_edges():
    assert conj_ratio_bound(0.7, 0.7) == 1.0
    assert conj_ratio_bound(1.0, 2.0) == pytest.approx(math.sinh(1) / math.sinh(0.5))
    for bad in [(0, 1), (2, 1), (-1, 1)]:
        with pytest.raises(DomainError):
            conj_ratio_bound(*bad)


@given(st.floats(0.01, 200))
def test_csch_stable(x):
    assert csch(x) > 0 and csch2(x) == pytest.approx(csch(x) ** 2, rel=1e-6)
    if x < 30:
        assert csch(x) == pytest.approx(1 / math.sinh(x))


def test_budgets_by_hand():
    c = BudgetConstants(2.0, 3.0, 5.0)
    plus = incidence_budget_plus(7.0, 4.0, 6, 11, c)
    assert plus == pytest.approx(7 * (2 / math.sinh(2) ** 2 + 3 * 216 / math.sinh(5.5) ** 2))
    degs = [1, 3, 4, 7, 6]
    minus = incidence_budget_minus(7.0, 4.0, 4, 11, degs, c)
    hecke = 1 + 9 + 16  # m = 1, 2, 3
    assert minus == pytest.approx(7 * (2 / math.sinh(2) ** 2 + 5 / math.sinh(math.log(11)) * hecke))
    assert c.scaled(2) == BudgetConstants(4.0, 6.0, 10.0)


def test_hecke_intersections_count_fixed_points():
    c = graph_neg_z()
    assert graph_hecke_intersections(c, [np.eye(2, dtype=complex)]) == 1
    # the translation moves every point, and -z composed with it has one fixed point
    assert graph_hecke_intersections(c, [translation_matrix(0.5)]) == 1
    with pytest.raises(DomainError):
        graph_hecke_intersections(graph_conj(), [np.eye(2)])


def test_hecke_m1_equals_diagonal():
    c = graph_neg_z()
    h = verify_hecke_bound(c, 1.0, 1, [np.eye(2, dtype=complex)])
    d = verify_diagonal_bound(c, 1.0)
    assert h.measured_value == pytest.approx(d.measured_value, rel=1e-9)
    assert h.ok and d.ok


def test_truncation_is_flagged():
    rep = verify_point_bound(fiber_curve(radius=0.5), ProductPoint.disk(0, 0), 3.0)
    assert rep.notes["truncated"]
    assert not rep.ok


def test_shipped_zoo_is_reproducible():
    shipped = json.loads(resources.files("shimura_fm").joinpath("data/curve_zoo.json").read_text())
    built = [{"name": n, "curve": c.to_json()} for n, c in curve_zoo()]
    assert json.loads(json.dumps(built)) == shipped["curves"]


def test_zoo_harness_selection():
    zoo = load_zoo()
    assert set(zoo_for("conj", zoo)) == {"graph_neg_z_axis", "graph_rot_90_axis",
                                         "graph_rot_120_axis", "fiber_0", "fiber_03",
                                         "graph_conj", "hecke_translate_5"}
    assert "graph_neg_z_axis" not in {name for name, _, _ in zoo_cells(zoo)}


def test_report_json_has_margin():
    rep = verify_diagonal_bound(graph_neg_z(), 0.5)
    d = rep.to_json()
    assert d["margin"] == pytest.approx(d["measured_value"] - d["bound_value"])
    assert d["ok"] is True and d["normalization"] == "curvature-1"


def test_conj_ratio_vacuous_when_small_tube_missed():
    rep = verify_conj_ratio(load_zoo()["hecke_translate_5"], 0.3, 0.6)
    assert rep.notes["vacuous"] and rep.notes["vol_r"] == 0
