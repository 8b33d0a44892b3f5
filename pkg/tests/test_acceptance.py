"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary.  Tolerances and time limits are the stated ones.
"""
import json
import math
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from shimura_fm import arithmetic_group as ag
from shimura_fm import cm_hecke as cm
from shimura_fm import genus_audit as ga
from shimura_fm import hyperbolic_geom as hg
from shimura_fm import volume_bounds as vb
from shimura_fm.quat_algebra import (INF, QuatAlgebra, candidate_primes, hilbert_symbol,
                                     left_regular_rep, ramified_places, split_mod_p,
                                     standard_order)

GOLDEN = Path(__file__).resolve().parents[1] / "golden"
SEED = 20240601


def golden(suite, name):
    return json.loads((GOLDEN / suite / f"{name}.json").read_text())["value"]


def rand_elt(A, rng):
    return A.element(*[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(4)])


@pytest.fixture(scope="module")
def O6():
    return standard_order(6)


def test_criterion_01_exact_identities(criterion):
    rng = random.Random(SEED)
    t0 = time.perf_counter()
    bad = 0
    for ab in ((-1, 3), (-1, -1)):
        A = QuatAlgebra(*ab)
        for _ in range(1000):
            x, y = rand_elt(A, rng), rand_elt(A, rng)
            bad += (x * y).reduced_norm() != x.reduced_norm() * y.reduced_norm()
            bad += x * x.conjugate() != A.scalar(x.reduced_norm())
            bad += x.reduced_trace() != x.conjugate().reduced_trace()
            bad += (x * y).conjugate() != y.conjugate() * x.conjugate()
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 5
    criterion(1, ok, f"violations={bad} time={dt:.2f}s")
    assert ok


def test_criterion_02_hilbert_product_formula(criterion):
    rng = random.Random(SEED + 2)
    nonzero = [v for v in range(-30, 31) if v]
    t0 = time.perf_counter()
    bad = []
    for _ in range(50):
        a, b = rng.choice(nonzero), rng.choice(nonzero)
        prod = hilbert_symbol(a, b, INF)
        for q in candidate_primes(a, b):
            prod *= hilbert_symbol(a, b, q)
        if prod != 1:
            bad.append((a, b))
    ram = sorted(str(v) for v in ramified_places(QuatAlgebra(-1, 3)))
    dt = time.perf_counter() - t0
    ok = not bad and ram == ["2", "3"] and dt < 30
    criterion(2, ok, f"failures={bad} ramified(-1,3)={ram} time={dt:.2f}s")
    assert ok


def test_criterion_03_regular_representation(criterion):
    rng = random.Random(SEED + 3)
    A = QuatAlgebra(-1, 3)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        x, y = rand_elt(A, rng), rand_elt(A, rng)
        Lx = left_regular_rep(x)
        bad += left_regular_rep(x * y) != Lx @ left_regular_rep(y)
        bad += Lx.det() != x.reduced_norm()
        bad += Lx.trace() != x.reduced_trace()
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 5
    criterion(3, ok, f"violations={bad} time={dt:.2f}s")
    assert ok


def test_criterion_04_split_mod_p(criterion, O6):
    t0 = time.perf_counter()
    A = O6.algebra
    ar = ag.arithmetic(O6)
    bad = []
    for p in (5, 7, 11, 13):
        s = split_mod_p(O6, p)
        I, J = s.I, s.J
        E = np.eye(2, dtype=np.int64)
        rel = (np.array_equal((I @ I) % p, (int(A.alpha) * E) % p)
               and np.array_equal((J @ J) % p, (int(A.beta) * E) % p)
               and np.array_equal((I @ J + J @ I) % p, 0 * E))
        B = s.basis_images
        hom = all(np.array_equal((B[a] @ B[b]) % p, s.matrix_of_coords(ar.mult[a, b]))
                  for a in range(4) for b in range(4))
        if not (rel and hom):
            bad.append(p)
    count = split_mod_p(O6, 5).unit_count()
    dt = time.perf_counter() - t0
    ok = not bad and count == 480 and dt < 60
    criterion(4, ok, f"bad primes={bad} units mod 5={count} time={dt:.2f}s")
    assert ok


def test_criterion_05_injectivity_radius(criterion, O6):
    t0 = time.perf_counter()
    height = 30  # bundled congruence height
    m5 = ag.min_congruence_trace(O6, 5, height)
    m7 = ag.min_congruence_trace(O6, 7, height)
    disp = ag.displacement_lower(27)
    law = not ag.congruence_trace_law(O6, 5, height) and not ag.congruence_trace_law(O6, 7, height)
    dt = time.perf_counter() - t0
    ok = m5 == 27 and m7 == 51 and disp >= 2 * math.log(5) - 1e-9 and dt < 300
    criterion(5, ok, f"min|tr| p=5: {m5} (stated 27), p=7: {m7} (stated 51); "
                     f"d(27)={disp:.6f} >= 2ln5={2 * math.log(5):.6f}; "
                     f"tr = 2 mod p^2 law holds: {law}; time={dt:.1f}s")
    assert ok


def test_criterion_06_hecke_degrees(criterion, O6):
    t0 = time.perf_counter()
    Ns = (2, 3, 4, 5, 6, 9, 25)
    counts = {N: cm.submodule_count(N) for N in Ns}
    formula = {N: cm.hecke_degree(N) for N in Ns}
    classes = {m: cm.hecke_elements(O6, m, 6).found for m in (5, 7)}
    dt = time.perf_counter() - t0
    ok = counts == formula and classes == {5: 6, 7: 8} and dt < 60
    criterion(6, ok, f"brute={counts} formula={formula} classes={classes} time={dt:.1f}s")
    assert ok


def test_criterion_07_potential_identities(criterion):
    rng = np.random.default_rng(SEED + 7)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        rad, ang = 0.9 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
        w = rad * complex(math.cos(ang), math.sin(ang))
        H = hg.complex_hessian(hg.potential_S_zw, hg.ProductPoint.disk(0, w)).matrix
        ref = np.diag([1, (1 - abs(w) ** 2) ** -2])
        worst = max(worst, np.abs(H - ref).max() / np.abs(ref).max())

    r, R = 0.5, 1.0
    F = hg.PotentialF(r, R)
    min_eig = math.inf
    tested = 0
    while tested < 40:
        z, w = (complex(*rng.uniform(-0.6, 0.6, 2)) for _ in range(2))
        at = hg.ProductPoint.disk(z, w)
        try:
            ev = hg.complex_hessian(F, at).eigenvalues()
        except hg.DomainError:
            continue  # near a seam
        min_eig = min(min_eig, float(ev.min()))
        tested += 1

    s_in = np.linspace(0, F.c, 20)
    plateau = np.abs(F.of_s(s_in) - F.c).max()
    s_out = np.linspace(F.C, F.C + 5, 20)
    outer = np.ptp(F.of_s(s_out) - s_out)
    hc, hC = abs(F.h_prime(F.c)), abs(F.h_prime(F.C) - 1)
    dt = time.perf_counter() - t0
    ok = (worst < 1e-5 and min_eig >= -1e-8 and plateau < 1e-6 and outer < 1e-6
          and hc < 1e-10 and hC < 1e-10 and dt < 30)
    criterion(7, ok, f"omega_S rel err={worst:.2e} min eig F={min_eig:.2e} plateau={plateau:.1e} "
                     f"outer={outer:.1e} h'(c)={hc:.1e} |h'(C)-1|={hC:.1e} time={dt:.1f}s")
    assert ok


def test_criterion_08_conjugate_ratio_sharpness(criterion):
    t0 = time.perf_counter()
    zoo = vb.load_zoo()
    sharp, details = set(), []
    for r, R in ((0.3, 0.6), (0.5, 1.0)):
        rep = vb.verify_conj_ratio(zoo["graph_conj"], r, R)
        conv = rep.notes["sharp_under"]
        sharp.add(tuple(conv))
        details.append(f"({r},{R}) ratio={rep.measured_value:.5f} bound={rep.bound_value:.5f} "
                       f"sharp_under={conv}")
    one = len(sharp) == 1 and len(next(iter(sharp))) == 1
    failures = []
    for name, curve in vb.zoo_for("conj", zoo).items():
        if name == "graph_conj":
            continue
        for r, R in ((0.3, 0.6), (0.5, 1.0)):
            rep = vb.verify_conj_ratio(curve, r, R)
            if not rep.ok:
                failures.append((name, r, R, rep.margin, rep.tolerance))
    dt = time.perf_counter() - t0
    ok = one and not failures and dt < 600
    criterion(8, ok, "; ".join(details) + f"; other curves failing={failures} time={dt:.0f}s")
    assert ok


def test_criterion_09_tube_volume_harness(criterion):
    t0 = time.perf_counter()
    zoo = vb.load_zoo()
    failures, cells = [], 0
    for name, curve, center in vb.zoo_cells(zoo):
        for r in (0.5, 1.0):
            rep = vb.verify_point_bound(curve, center, r)
            cells += 1
            if not rep.ok:
                failures.append(("point", name, r, rep.margin, rep.tolerance))
    agree = []
    for name, curve in vb.zoo_for("diag", zoo).items():
        for r in (0.5, 1.0):
            d = vb.verify_diagonal_bound(curve, r)
            h = vb.verify_hecke_bound(curve, r, 1, [hg.IDENTITY],
                                      intersections=curve.meta.get("diag_intersections", 1))
            cells += 1
            if not d.ok:
                failures.append(("diag", name, r, d.margin, d.tolerance))
            if not h.ok:
                failures.append(("hecke", name, r, h.margin, h.tolerance))
            agree.append(abs(d.measured_value - h.measured_value) <= d.tolerance)
    dt = time.perf_counter() - t0
    ok = not failures and all(agree) and dt < 600
    criterion(9, ok, f"cells={cells} failures={failures} T_1==diag: {all(agree)} time={dt:.0f}s")
    assert ok


def test_criterion_10_cm_flip(criterion, O6):
    t0 = time.perf_counter()
    stats = {}
    ok = True
    for p in (5, 7):
        pairs = cm.cm_pair_scan(O6, p, 12)
        labels = {x.label for x in pairs}
        flips = all(x.flipped().label != x.label for x in pairs)
        both = labels == {cm.HEEGNER, cm.ANTI_HEEGNER}
        stats[p] = (len(pairs), flips)
        ok &= bool(pairs) and flips and both
    dt = time.perf_counter() - t0
    ok &= dt < 300
    criterion(10, ok, f"(pairs, all flip) per p={stats} time={dt:.1f}s")
    assert ok


def test_criterion_11_repulsion(criterion, O6):
    t0 = time.perf_counter()
    g = golden("repulsion", "d6_p5_r1")
    rep = cm.repulsion_experiment(O6, 5, 1.0, 12, unit_height=g["unit_height"], reach=g["reach"])
    dims = {h["solution_dim"] for h in rep.hits}
    checks = all(all(h["checks"].values()) for h in rep.hits if h["solution_dim"] == 1)
    dt = time.perf_counter() - t0
    ok = (bool(rep.hits) and dims <= {1, 2} and checks and rep.max_M is not None
          and rep.max_M == g["max_M"] and dt < 600)
    criterion(11, ok, f"hits={len(rep.hits)} dims={sorted(dims)} checks={checks} "
                      f"max_M={rep.max_M} (golden {g['max_M']}) time={dt:.1f}s")
    assert ok


def test_criterion_12_nori(criterion, O6):
    t0 = time.perf_counter()
    gens = ag.unit_generators(O6)
    res = {p: ga.nori_check(gens, p) for p in (5, 7, 11)}
    dt = time.perf_counter() - t0
    ok = all(r.surjective and r.image_order == r.target_order for r in res.values()) and dt < 120
    criterion(12, ok, ", ".join(f"p={p}: {r.image_order}/{r.target_order} ({r.target})"
                                for p, r in res.items()) + f" time={dt:.1f}s")
    assert ok


def _level_table():
    return {(d, p): ga.level_genus(d, p) for d in (6, 10, 22) for p in (5, 7, 11, 13)}


def test_criterion_13_genus_audit(criterion):
    t0 = time.perf_counter()
    table = _level_table()
    integral = all(isinstance(L.genus_per_component, int) for L in table.values())
    band = all(1e-2 <= L.genus_per_component / p ** 3 <= 1e2 for (d, p), L in table.items())
    growing = all(table[d, p].genus_per_component < table[d, q].genus_per_component
                  for d in (6, 10, 22) for p, q in ((5, 7), (7, 11), (11, 13)))
    reports = [ga.threshold_search(k, 6) for k in (1, 2, 3)]
    finite = reports[1].p_threshold is not None
    mono = all(a.p_threshold <= b.p_threshold for a, b in zip(reports, reports[1:]))
    echo = reports[1].assumptions["constants"] == {"c1": 1.0, "c2": 1.0, "cR": 1.0}
    crossed = reports[1].at_threshold["genus_lower"] > reports[1].at_threshold["genus_upper"]
    dt = time.perf_counter() - t0
    ok = integral and band and growing and finite and mono and echo and crossed and dt < 60
    criterion(13, ok, f"integral={integral} band={band} genus increasing={growing} "
                      f"threshold(k=1,2,3)={[r.p_threshold for r in reports]} echo={echo} "
                      f"time={dt:.1f}s")
    assert ok


def test_criterion_13b_genus_ratio_literal(criterion):
    """The ratio genus/p^3 itself, read as increasing in p."""
    table = _level_table()
    ratios = {d: [round(table[d, p].genus_per_component / p ** 3, 5) for p in (5, 7, 11, 13)]
              for d in (6, 10, 22)}
    ok = all(all(a < b for a, b in zip(v, v[1:])) for v in ratios.values())
    criterion("13b", ok, f"genus/p^3 by d: {ratios}")
    assert ok
