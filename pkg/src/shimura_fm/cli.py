"""Command-line front end: ``shimura-fm <command> ...``.

Every result is one JSON line carrying tool_version, config_echo, timing and
precision ("exact" or a numeric tolerance).  Exit status is 0 on success, 1 on
a domain error or golden drift, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError

DEFAULT_HEIGHTS = {"scan": 12, "torsion": 10, "conj": 6, "units": 8, "congruence": 30,
                   "hecke": 6, "generators": 2}


@dataclasses.dataclass
class RunConfig:
    algebra: tuple = (-1, 3)
    heights: dict = dataclasses.field(default_factory=lambda: dict(DEFAULT_HEIGHTS))
    primes: list = dataclasses.field(default_factory=lambda: [5, 7])
    constants: dict = dataclasses.field(default_factory=lambda: {"c1": 1.0, "c2": 1.0, "cR": 1.0})
    normalization: str | None = None
    seed: int = 0
    threads: int = 1

    @classmethod
    def load(cls, path=None, **overrides):
        cfg = cls()
        if path:
            with open(path) as fh:
                data = json.load(fh)
            unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
            if unknown:
                raise DomainError(f"unknown config keys: {sorted(unknown)}")
            for k, v in data.items():
                if k == "heights":
                    cfg.heights.update(v)
                elif k == "constants":
                    cfg.constants.update(v)
                else:
                    setattr(cfg, k, tuple(v) if k == "algebra" else v)
        for k, v in overrides.items():
            if v is not None:
                setattr(cfg, k, v)
        return cfg

    def budget(self):
        from .volume_bounds import BudgetConstants
        return BudgetConstants(**{k: float(v) for k, v in self.constants.items()})

    def echo(self):
        d = dataclasses.asdict(self)
        d["algebra"] = [str(Fraction(x)) for x in self.algebra]
        return d


# ---------------------------------------------------------------------------
# serialization

def to_plain(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return to_plain(x.tolist())
    if hasattr(x, "to_json"):
        return to_plain(x.to_json())
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return to_plain(dataclasses.asdict(x))
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [to_plain(v) for v in x]
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


class Emitter:
    def __init__(self, cfg, fmt="json", stream=None):
        self.cfg, self.fmt = cfg, fmt
        self.stream = stream or sys.stdout
        self.rows = []

    def emit(self, command, result, precision="exact", started=None):
        rec = {"command": command, "tool_version": __version__, "config_echo": self.cfg.echo(),
               "timing": {"seconds": round(time.perf_counter() - started, 6) if started else 0.0},
               "precision": precision, "result": to_plain(result)}
        if self.fmt == "csv":
            self.rows.extend(_csv_rows(command, rec["result"], precision))
        else:
            self.stream.write(json.dumps(rec, sort_keys=True) + "\n")
        return rec

    def close(self):
        if self.fmt != "csv" or not self.rows:
            return
        keys = sorted({k for r in self.rows for k in r})
        w = csv.DictWriter(self.stream, fieldnames=keys)
        w.writeheader()
        w.writerows(self.rows)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def _csv_rows(command, result, precision):
    items = result if isinstance(result, list) else [result]
    return [{"command": command, "precision": precision,
             **(_flatten(it) if isinstance(it, dict) else {"value": it})} for it in items]


# ---------------------------------------------------------------------------
# command bodies

def _order(args, cfg):
    from .quat_algebra import maximal_order, standard_order
    if getattr(args, "d", None):
        return standard_order(args.d)
    a, b = cfg.algebra
    return maximal_order(Fraction(a), Fraction(b))


def cmd_algebra(args, cfg, out):
    from .quat_algebra import (QuatAlgebra, discriminant, hilbert_symbol, is_indefinite,
                               ramified_places)
    t0 = time.perf_counter()
    a = Fraction(args.alpha) if args.alpha is not None else Fraction(cfg.algebra[0])
    b = Fraction(args.beta) if args.beta is not None else Fraction(cfg.algebra[1])
    if args.action == "hilbert":
        res = {"a": a, "b": b, "place": args.place, "symbol": hilbert_symbol(a, b, args.place)}
    else:
        A = QuatAlgebra(a, b)
        res = {"algebra": A.to_json(), "ramified": [str(v) for v in sorted(ramified_places(A))],
               "discriminant": discriminant(A), "indefinite": is_indefinite(A)}
    out.emit(f"algebra {args.action}", res, started=t0)


def cmd_order(args, cfg, out):
    from .quat_algebra import is_maximal, order_discriminant, split_mod_p
    t0 = time.perf_counter()
    O = _order(args, cfg)
    if args.action == "split":
        s = split_mod_p(O, args.p)
        res = {"order": O.to_json(), "p": args.p, "basis_images": s.basis_images,
               "unit_count": s.unit_count() if args.count else None,
               "gl2": (args.p ** 2 - 1) * (args.p ** 2 - args.p)}
    else:
        res = {"order": O.to_json(), "discriminant": order_discriminant(O),
               "maximal": is_maximal(O), "traces": O.traces(), "norm_gram": O.norm_gram()}
    out.emit(f"order {args.action}", res, started=t0)


def cmd_group(args, cfg, out):
    from . import arithmetic_group as ag
    t0 = time.perf_counter()
    O = _order(args, cfg)
    h = args.height
    if args.action == "units":
        els = ag.units(O, h or cfg.heights["units"], args.norm)
        res = {"norm": args.norm, "height": h or cfg.heights["units"], "count": len(els),
               "elements": [e.to_json() for e in els]}
    elif args.action == "congruence":
        h = h or cfg.heights["congruence"]
        tr = ag.min_congruence_trace(O, args.p, h)
        law = {"violations": [g.to_json() for g in ag.congruence_trace_law(O, args.p, h)]}
        res = {"p": args.p, "height": h, "min_abs_trace": tr, "trace_law": law,
               "displacement_lower": ag.displacement_lower(tr) if tr and abs(tr) > 2 else None,
               "two_log_p": 2 * float(np.log(args.p))}
    elif args.action == "elliptic":
        th, ch = h or cfg.heights["torsion"], args.conj_height or cfg.heights["conj"]
        e2, e3 = ag.elliptic_class_counts(O, th, ch)
        res = {"height": th, "conj_height": ch, "e2": e2, "e3": e3}
    else:
        cs = ag.component_structure(O, args.p, h or 10)
        res = {"p": args.p, "copies": cs.copies, "one_sided": cs.one_sided,
               "witness": cs.witness.to_json() if cs.witness is not None else None}
    out.emit(f"group {args.action}", res, started=t0)


def cmd_cm(args, cfg, out):
    from .cm_hecke import ANTI_HEEGNER, HEEGNER, cm_pair_scan
    t0 = time.perf_counter()
    O = _order(args, cfg)
    pairs = cm_pair_scan(O, args.p, args.height or cfg.heights["scan"], cfg.heights["torsion"],
                         cfg.heights["conj"])
    if args.action == "scan":
        for pair in pairs:
            out.emit("cm pair", pair, precision=1e-8, started=t0)
    flips = [p.flipped().label != p.label for p in pairs]
    res = {"p": args.p, "height": args.height or cfg.heights["scan"], "pairs": len(pairs),
           "heegner": sum(p.label == HEEGNER for p in pairs),
           "anti_heegner": sum(p.label == ANTI_HEEGNER for p in pairs),
           "flip_law": all(flips)}
    out.emit(f"cm {args.action}", res, precision=1e-8, started=t0)


def _parse_complex(s):
    return complex(s.replace(" ", "").replace("i", "j"))


def cmd_hecke(args, cfg, out):
    from .cm_hecke import hecke_elements, hecke_tube_contains
    from .hyperbolic_geom import HPoint, ProductPoint
    t0 = time.perf_counter()
    O = _order(args, cfg)
    hs = hecke_elements(O, args.m, args.height or cfg.heights["hecke"])
    if args.action == "enum":
        out.emit("hecke enum", hs, started=t0)
        return
    pt = ProductPoint(HPoint(_parse_complex(args.z), "UHP"), HPoint(_parse_complex(args.w), "UHP"))
    res = {"m": args.m, "r": args.r, "z": args.z, "w": args.w,
           "contains": hecke_tube_contains(args.m, args.r, pt, hs), "hecke_found": hs.found}
    out.emit("hecke tube", res, precision=1e-12, started=t0)


def cmd_repulsion(args, cfg, out):
    from .cm_hecke import repulsion_experiment
    t0 = time.perf_counter()
    O = _order(args, cfg)
    rep = repulsion_experiment(O, args.p, args.r, args.height or cfg.heights["scan"],
                               unit_height=args.unit_height or cfg.heights["units"],
                               reach=args.reach)
    res = rep.to_json()
    res["all_checks"] = all(all(h["checks"].values()) for h in rep.hits)
    res["dims"] = sorted({h["solution_dim"] for h in rep.hits})
    out.emit("repulsion run", res, precision=1e-6, started=t0)


def cmd_volume(args, cfg, out):
    from .hyperbolic_geom import ProductPoint, real_to_disk_matrix
    from . import volume_bounds as vb
    t0 = time.perf_counter()
    zoo = vb.load_zoo()
    if args.action == "zoo":
        out.emit("volume zoo", [{"name": k, "harnesses": c.meta.get("harnesses", [])}
                                for k, c in zoo.items()], started=t0)
        return
    if args.curve not in zoo:
        raise DomainError(f"unknown curve {args.curve!r}; known: {sorted(zoo)}")
    curve = zoo[args.curve]
    norm = args.normalization or cfg.normalization
    if args.bound == "point":
        center = ProductPoint.disk(complex(*args.center[:2]), complex(*args.center[2:])) \
            if args.center else next(c for n, _, c in vb.zoo_cells({args.curve: curve}))
        rep = vb.verify_point_bound(curve, center, args.r, mesh=args.mesh, normalization=norm)
    elif args.bound == "diag":
        rep = vb.verify_diagonal_bound(curve, args.r, mesh=args.mesh, normalization=norm)
    elif args.bound == "hecke":
        if args.m == 1:
            mats = [np.eye(2, dtype=complex)]
        else:
            from .cm_hecke import hecke_elements
            hs = hecke_elements(_order(args, cfg), args.m, cfg.heights["hecke"])
            mats = [real_to_disk_matrix(M) for M in hs.matrices()]
        # T_1 is the diagonal, whose intersection number the zoo declares
        k = curve.meta.get("diag_intersections") if args.m == 1 else None
        rep = vb.verify_hecke_bound(curve, args.r, args.m, mats, intersections=k, mesh=args.mesh,
                                    normalization=norm)
    else:
        if args.R is None:
            raise DomainError("--R is required for the conj bound")
        rep = vb.verify_conj_ratio(curve, args.r, args.R, mesh=args.mesh, normalization=norm)
    res = rep.to_json()
    out.emit("volume verify", res, precision=rep.tolerance, started=t0)
    return 0 if rep.ok else 1


def cmd_audit(args, cfg, out):
    from . import genus_audit as ga
    t0 = time.perf_counter()
    if args.action == "genus":
        out.emit("audit genus", ga.level_genus(args.d, args.p), started=t0)
    elif args.action == "threshold":
        if args.constants:
            with open(args.constants) as fh:
                cfg.constants.update(json.load(fh))
        rep = ga.threshold_search(args.k, args.d, cfg.budget(), R=args.R,
                                  hecke_cutoff=args.hecke_cutoff, p_max=args.p_max)
        out.emit("audit threshold", rep, precision=1e-12, started=t0)
        return 0 if rep.p_threshold is not None else 1
    elif args.action == "nori":
        from .arithmetic_group import unit_generators
        from .quat_algebra import standard_order
        gens = unit_generators(standard_order(args.d), cfg.heights["generators"])
        out.emit("audit nori", ga.nori_check(gens, args.p), started=t0)
    else:
        out.emit("audit catalog", [ga.catalog_crosscheck(d) for d in sorted(ga.load_catalog())],
                 started=t0)


# ---------------------------------------------------------------------------
# selftest

def _random_element(A, rng, span=6):
    return A.element(*[Fraction(rng.randint(-span, span), rng.randint(1, 3)) for _ in range(4)])


def selftest(quick=False, seed=0):
    """Exact invariant suite.  Returns {check: bool}."""
    from .quat_algebra import (QuatAlgebra, hilbert_symbol, left_regular_rep, ramified_places,
                               standard_order, split_mod_p)
    from .genus_audit import group_orders
    from .cm_hecke import hecke_degree, submodule_count
    rng = random.Random(seed)
    n = 100 if quick else 1000
    checks = {}
    for a, b in ((-1, 3), (-1, -1)):
        A = QuatAlgebra(a, b)
        ok = True
        for _ in range(n):
            x, y = _random_element(A, rng), _random_element(A, rng)
            ok &= (x * y).reduced_norm() == x.reduced_norm() * y.reduced_norm()
            ok &= (x * x.conjugate()) == A.scalar(x.reduced_norm())
            ok &= x.reduced_trace() == x.conjugate().reduced_trace()
            ok &= (x * y).conjugate() == y.conjugate() * x.conjugate()
        checks[f"norm_trace_conj({a},{b})"] = bool(ok)
    A = QuatAlgebra(-1, 3)
    ok = True
    for _ in range(n // 5):
        x, y = _random_element(A, rng), _random_element(A, rng)
        Lx, Ly = left_regular_rep(x), left_regular_rep(y)
        ok &= left_regular_rep(x * y) == Lx @ Ly
        ok &= Lx.det() == x.reduced_norm() and Lx.trace() == x.reduced_trace()
    checks["regular_rep"] = bool(ok)
    ok = True
    for _ in range(10 if quick else 50):
        a = rng.choice([v for v in range(-30, 31) if v])
        b = rng.choice([v for v in range(-30, 31) if v])
        ok &= len(ramified_places(QuatAlgebra(a, b))) % 2 == 0
        ok &= hilbert_symbol(a, b, "inf") == (-1 if a < 0 and b < 0 else 1)
    checks["hilbert_product"] = bool(ok)
    checks["ramified(-1,3)"] = sorted(v.q for v in ramified_places(A)) == [2, 3]
    O = standard_order(6)
    checks["unit_count_mod5"] = split_mod_p(O, 5).unit_count() == group_orders(5)["gl2"] == 480
    checks["submodule_counts"] = all(submodule_count(N) == hecke_degree(N) for N in (2, 3, 4, 5))
    return checks


def cmd_selftest(args, cfg, out):
    t0 = time.perf_counter()
    checks = selftest(args.quick, cfg.seed)
    out.emit("selftest", {"quick": args.quick, "checks": checks, "ok": all(checks.values())},
             started=t0)
    return 0 if all(checks.values()) else 1


# ---------------------------------------------------------------------------
# golden files

def _golden_values(suite, cfg):
    """DERIVED regression values for a suite, keyed by file name."""
    from .quat_algebra import standard_order
    from . import genus_audit as ga
    O = standard_order(6)
    if suite == "threshold":
        out = {}
        for k in (1, 2, 3):
            rep = ga.threshold_search(k, 6, cfg.budget())
            out[f"d6_k{k}"] = {"p_threshold": rep.p_threshold, "constants": cfg.constants}
        return out
    if suite == "level_genus":
        out = {}
        for d in (6, 10, 22):
            for p in (5, 7, 11, 13):
                lg = ga.level_genus(d, p)
                out[f"d{d}_p{p}"] = {"genus_per_component": lg.genus_per_component,
                                     "components": lg.components, "degree": lg.degree}
        return out
    if suite == "cm_scan":
        from .cm_hecke import ANTI_HEEGNER, HEEGNER, cm_pair_scan
        out = {}
        for p in (5, 7):
            pairs = cm_pair_scan(O, p, cfg.heights["scan"], cfg.heights["torsion"],
                                 cfg.heights["conj"])
            out[f"d6_p{p}"] = {"height": cfg.heights["scan"], "pairs": len(pairs),
                               "heegner": sum(x.label == HEEGNER for x in pairs),
                               "anti_heegner": sum(x.label == ANTI_HEEGNER for x in pairs)}
        return out
    if suite == "repulsion":
        from .cm_hecke import repulsion_experiment
        rep = repulsion_experiment(O, 5, 1.0, cfg.heights["scan"], unit_height=cfg.heights["units"])
        return {"d6_p5_r1": {"max_M": rep.max_M, "hits": len(rep.hits),
                             "unit_height": cfg.heights["units"], "reach": rep.reach}}
    raise DomainError(f"unknown golden suite {suite!r}; known: {GOLDEN_SUITES}")


GOLDEN_SUITES = ("threshold", "level_genus", "cm_scan", "repulsion")


def _diff(expected, actual, path="", rtol=0.0):
    diffs = []
    if isinstance(expected, dict) and isinstance(actual, dict):
        for k in sorted(set(expected) | set(actual)):
            if k not in expected or k not in actual:
                diffs.append(f"{path}/{k}: present on one side only")
            else:
                diffs.extend(_diff(expected[k], actual[k], f"{path}/{k}", rtol))
    elif isinstance(expected, float) or isinstance(actual, float):
        if abs(expected - actual) > rtol * max(abs(expected), abs(actual)):
            diffs.append(f"{path}: expected {expected}, got {actual}")
    elif expected != actual:
        diffs.append(f"{path}: expected {expected!r}, got {actual!r}")
    return diffs


def golden_manage(mode, suite, cfg, root="golden"):
    root = Path(root) / suite
    values = to_plain(_golden_values(suite, cfg))
    if mode == "record":
        root.mkdir(parents=True, exist_ok=True)
        for name, v in values.items():
            (root / f"{name}.json").write_text(
                json.dumps({"value": v, "tolerance": "exact"}, indent=1, sort_keys=True) + "\n")
        return {"suite": suite, "mode": mode, "recorded": sorted(values), "ok": True}
    diffs = []
    for name, v in values.items():
        f = root / f"{name}.json"
        if not f.exists():
            diffs.append(f"{suite}/{name}: no golden file")
            continue
        g = json.loads(f.read_text())
        tol = g.get("tolerance", "exact")
        diffs.extend(_diff(g["value"], v, f"{suite}/{name}", 0.0 if tol == "exact" else float(tol)))
    return {"suite": suite, "mode": mode, "checked": sorted(values), "diffs": diffs,
            "ok": not diffs}


def cmd_golden(args, cfg, out):
    t0 = time.perf_counter()
    suites = GOLDEN_SUITES if args.suite == "all" else (args.suite,)
    ok = True
    for s in suites:
        rep = golden_manage(args.mode, s, cfg, args.dir)
        out.emit(f"golden {args.mode}", rep, started=t0)
        ok &= rep["ok"]
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS lets the flags appear before or after the subcommand
    common.add_argument("--config", default=argparse.SUPPRESS, help="RunConfig JSON file")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json",
                     default=argparse.SUPPRESS)
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv",
                     default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="shimura-fm", parents=[common],
                                 description="Quaternion orders, Shimura curves and volume bounds.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        p.set_defaults(func=func)
        return p

    p = add("algebra", cmd_algebra, help="ramification, discriminant, Hilbert symbols")
    p.add_argument("action", choices=["info", "hilbert"])
    p.add_argument("--alpha")
    p.add_argument("--beta")
    p.add_argument("--place", default="inf", help="prime or 'inf'")

    p = add("order", cmd_order, help="maximal orders and their reductions")
    p.add_argument("action", choices=["show", "split"])
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--count", action="store_true", help="brute-force unit count mod p")

    p = add("group", cmd_group, help="unit group enumeration and congruence subgroups")
    p.add_argument("action", choices=["units", "congruence", "elliptic", "components"])
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--norm", type=int, default=1)
    p.add_argument("--height", type=int)
    p.add_argument("--conj-height", type=int)

    p = add("cm", cmd_cm, help="CM pair scan and Heegner classification")
    p.add_argument("action", choices=["scan", "classify"])
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--height", type=int)

    p = add("hecke", cmd_hecke, help="Hecke element sets and tube membership")
    p.add_argument("action", choices=["enum", "tube"])
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--height", type=int)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--z", default="1j", help="first coordinate in the upper half plane")
    p.add_argument("--w", default="1j")

    p = add("repulsion", cmd_repulsion, help="repulsion experiment")
    p.add_argument("action", choices=["run"])
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--height", type=int)
    p.add_argument("--unit-height", type=int)
    p.add_argument("--reach", type=float, default=4.0)

    p = add("volume", cmd_volume, help="volume lower bound harnesses")
    p.add_argument("action", choices=["verify", "zoo"])
    p.add_argument("--curve")
    p.add_argument("--bound", choices=["point", "diag", "hecke", "conj"], default="point")
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--R", type=float)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--mesh", type=float)
    p.add_argument("--center", type=float, nargs=4, metavar=("ZRE", "ZIM", "WRE", "WIM"),
                   help="ball centre (z, w) in the disk")
    p.add_argument("--normalization", choices=["curvature-1", "curvature-2", "curvature-4"])

    p = add("audit", cmd_audit, help="genus audit and threshold search")
    p.add_argument("action", choices=["genus", "threshold", "nori", "catalog"])
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--constants", help="JSON file with c1, c2, cR")
    p.add_argument("--R", type=float, default=4.0)
    p.add_argument("--hecke-cutoff", type=int, default=10)
    p.add_argument("--p-max", type=int, default=100_000)

    p = add("selftest", cmd_selftest, help="exact invariant suite")
    p.add_argument("--quick", action="store_true")

    p = add("golden", cmd_golden, help="record or check regression values")
    p.add_argument("mode", choices=["record", "check"])
    p.add_argument("--suite", default="all", choices=("all",) + GOLDEN_SUITES)
    p.add_argument("--dir", default="golden")
    return ap


def dispatch(argv=None, stream=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig.load(getattr(args, "config", None), seed=getattr(args, "seed", None),
                             threads=getattr(args, "threads", None))
    except (OSError, json.JSONDecodeError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Emitter(cfg, getattr(args, "fmt", "json"), stream)
    try:
        code = args.func(args, cfg, out) or 0
    except (DomainError, ConvergenceError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        out.emit("error", {"error": type(exc).__name__, "message": msg,
                           "diagnostics": getattr(exc, "diagnostics", {})})
        code = 1
    out.close()
    return code


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
