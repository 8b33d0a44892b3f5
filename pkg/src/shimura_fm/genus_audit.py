"""Genus bookkeeping for level-p Shimura curves and the threshold skeleton.

|G(F_p)| is taken to be the order of the projective group PGL_2(F_p), the
monodromy group of the level covering; every report records this choice.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np

from ._exact import is_prime, prime_factors
from .arithmetic_group import (component_structure, congruent_to_pm_one, norm_one_image_order,
                              reduction_image, torsion_elements, unit_generators)
from .cm_hecke import hecke_degree
from .errors import DomainError
from .quat_algebra import split_mod_p, standard_order
from .volume_bounds import BudgetConstants, incidence_budget_minus, incidence_budget_plus

GROUP_CONVENTION = "pgl2"


def group_orders(p):
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    gl2 = (p * p - 1) * (p * p - p)
    pgl2 = gl2 // (p - 1)
    return {"gl2": gl2, "pgl2": pgl2, "psl2": pgl2 // math.gcd(2, p - 1)}


# ---------------------------------------------------------------------------
# catalog

class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CurveInvariants:
    discriminant: int
    genus: int
    e2: int
    e3: int
    source: str
    heights: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def euler_characteristic(self):
        """Orbifold Euler characteristic 2 - 2g - e2/2 - 2 e3/3."""
        return 2 - 2 * self.genus - Fraction(self.e2, 2) - Fraction(2 * self.e3, 3)


def _validate_record(rec):
    problems = []
    for key, kind in (("discriminant", int), ("genus", int), ("e2", int), ("e3", int), ("source", str)):
        if not isinstance(rec.get(key), kind) or isinstance(rec.get(key), bool):
            problems.append(f"{key} missing or not {kind.__name__}")
    if problems:
        return problems
    d = rec["discriminant"]
    primes = prime_factors(d)
    if d <= 1 or math.prod(primes) != d or len(primes) % 2:
        problems.append("discriminant must be a squarefree product of an even number of primes")
    if min(rec["genus"], rec["e2"], rec["e3"]) < 0:
        problems.append("negative invariant")
    inv = CurveInvariants(d, rec["genus"], rec["e2"], rec["e3"], rec["source"])
    if not problems and inv.euler_characteristic >= 0:
        problems.append("Euler characteristic is not negative")
    return problems


def load_catalog(path=None):
    if path is None:
        text = resources.files("shimura_fm.data").joinpath("catalog.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        data = json.loads(text)
        records = data["records"] if isinstance(data, dict) else data
        if not isinstance(records, list):
            raise TypeError("expected a JSON array of records")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CatalogError(f"catalog is not readable: {exc}") from exc
    out, bad = {}, []
    for idx, rec in enumerate(records):
        problems = _validate_record(rec) if isinstance(rec, dict) else ["record is not an object"]
        if problems:
            bad.append(f"record {idx} ({rec.get('discriminant') if isinstance(rec, dict) else rec!r}): "
                       + "; ".join(problems))
            continue
        out[rec["discriminant"]] = CurveInvariants(rec["discriminant"], rec["genus"], rec["e2"],
                                                   rec["e3"], rec["source"], rec.get("heights", {}))
    if bad:
        raise CatalogError("invalid catalog records:\n" + "\n".join(bad))
    return out


_CATALOG = None


def catalog_lookup(d, catalog=None):
    global _CATALOG
    if d == 1:
        raise DomainError("d = 1 is the split algebra; the catalog holds Shimura curves only")
    if catalog is None:
        if _CATALOG is None:
            _CATALOG = load_catalog()
        catalog = _CATALOG
    if d not in catalog:
        raise KeyError(f"discriminant {d} is not in catalog")
    return catalog[d]


def catalog_crosscheck(d):
    """Compare catalog (e2, e3) with orbit counts from the unit group."""
    from .arithmetic_group import elliptic_class_counts
    inv = catalog_lookup(d)
    h = inv.heights or {"torsion": 12, "conj": 6}
    counts = elliptic_class_counts(standard_order(d), h["torsion"], h["conj"])
    return {"d": d, "catalog": (inv.e2, inv.e3), "enumerated": counts,
            "agree": counts == (inv.e2, inv.e3), "heights": h}


def elliptic_formula(d):
    """(e2, e3) for a maximal order from the local factors 1 - (-4/q), 1 - (-3/q)."""
    e2 = e3 = 1
    for q in prime_factors(d):
        e2 *= 1 - (0 if q == 2 else (1 if q % 4 == 1 else -1))
        e3 *= 1 - (0 if q == 3 else (1 if q % 3 == 1 else -1))
    return e2, e3


def genus_formula(d):
    phi = math.prod(q - 1 for q in prime_factors(d))
    e2, e3 = elliptic_formula(d)
    g = 1 + Fraction(phi, 12) - Fraction(e2, 4) - Fraction(e3, 3)
    return g


# ---------------------------------------------------------------------------
# level structure

@dataclass
class LevelGenus:
    d: int
    p: int
    components: int
    genus_per_component: int
    degree: int
    predicted_degree: int
    ramified: bool
    euler_characteristic: str
    copies: int
    convention: str = ("degree = |image of O^1 in (O/pO)^*/+-1| by closure; "
                       "components = 2 x copies of H+-")

    def to_json(self):
        return asdict(self)


def genus_from_degree(chi, deg, d=None, p=None):
    """Genus of one component from 2g - 2 = deg * |chi|; non-integral values are a convention fault."""
    two_g_minus_2 = -deg * Fraction(chi)
    if two_g_minus_2.denominator != 1 or two_g_minus_2.numerator % 2:
        raise DomainError(f"non-integral genus at d={d}, p={p}: deg={deg}, chi={chi}, "
                          f"2g-2 = {two_g_minus_2}")
    return int(two_g_minus_2) // 2 + 1


def level_genus_value(d, p, catalog=None):
    """Genus of one component at a prime p not dividing d (degree |PSL_2(F_p)|)."""
    chi = catalog_lookup(d, catalog).euler_characteristic
    return genus_from_degree(chi, group_orders(p)["psl2"], d, p)


def level_genus(d, p, check_torsion=True, unit_height=10, gen_height=3):
    """Level-p genus by multiplicativity of the orbifold Euler characteristic.

    At p | d the level subgroup is the kernel of O^1 -> (O/pO)^*, and the same
    closure computes its index.
    """
    if p % 2 == 0 or not is_prime(p):
        raise DomainError("p must be an odd prime")
    inv = catalog_lookup(d)
    O = standard_order(d)
    if check_torsion:
        for kind in ("order4", "order6"):
            tors = torsion_elements(O, kind, 4)
            if tors and congruent_to_pm_one(O, [t.coords for t in tors], p).any():
                raise DomainError(f"torsion survives in the level-{p} subgroup")
    deg = len(reduction_image(O, unit_generators(O, gen_height), p))
    predicted = norm_one_image_order(O, p)
    if deg != predicted:
        raise DomainError(f"unit closure mod {p} has order {deg}, expected {predicted}; "
                          f"raise gen_height")
    g = genus_from_degree(inv.euler_characteristic, deg, d, p)
    cs = component_structure(O, p, unit_height)
    return LevelGenus(d, p, 2 * cs.copies, g, deg, predicted, d % p == 0,
                      str(inv.euler_characteristic), cs.copies)


# ---------------------------------------------------------------------------
# Riemann-Hurwitz

def genus_lower(C_dot_F, genus_level):
    """(1/2)(C.F)(g_level - 1)."""
    return Fraction(C_dot_F) * (genus_level - 1) / 2


def genus_upper(deg_alpha, g_V, mult_CM):
    if deg_alpha < 1:
        raise DomainError("deg_alpha must be at least 1")
    return 1 + deg_alpha * (g_V - 1) + mult_CM / 2


def bidegree_identity(C_prime_dot_F, group_order):
    if C_prime_dot_F <= 0 or group_order <= 0:
        raise DomainError("positive inputs required")
    return C_prime_dot_F * group_order


# ---------------------------------------------------------------------------
# Nori surjectivity

def _projective_key(m, p):
    flat = [int(x) % p for x in np.asarray(m).ravel()]
    k = next(i for i, v in enumerate(flat) if v)
    inv = pow(flat[k], -1, p)
    return tuple(v * inv % p for v in flat)


@dataclass
class NoriResult:
    p: int
    surjective: bool
    image_order: int
    target: str
    target_order: int


def projective_closure(mats, p, limit=2_000_000):
    """Group generated by matrices in PGL_2(F_p), as a set of normalized keys."""
    gens = [np.asarray(m, dtype=np.int64) % p for m in mats]
    ident = _projective_key(np.eye(2, dtype=np.int64), p)
    seen = {ident}
    frontier = [np.eye(2, dtype=np.int64)]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = (a @ g) % p
                k = _projective_key(b, p)
                if k not in seen:
                    seen.add(k)
                    nxt.append(b)
        if len(seen) > limit:
            raise RuntimeError("closure exceeded limit")
        frontier = nxt
    return seen


def nori_check(gens, p):
    """Closure of the mod-p images of units, compared with PSL_2 or PGL_2."""
    if not gens:
        return NoriResult(p, False, 1, "psl2", group_orders(p)["psl2"])
    O = gens[0].order
    split = split_mod_p(O, p)
    mats = [split.matrix_of_coords(g.coords) for g in gens]
    image = projective_closure(mats, p)
    norms = {g.norm for g in gens}
    orders = group_orders(p)
    target = "psl2" if norms == {1} else "pgl2"
    return NoriResult(p, len(image) == orders[target], len(image), target, orders[target])


# ---------------------------------------------------------------------------
# threshold

@dataclass
class ThresholdReport:
    k: int
    d: int
    p_threshold: int | None
    status: str
    assumptions: dict
    at_threshold: dict = field(default_factory=dict)

    def to_json(self):
        return asdict(self)


def threshold_terms(k, d, p, constants=BudgetConstants(), R=4.0, hecke_cutoff=10, g_level=None):
    """Both sides of the final comparison at a single prime."""
    G = group_orders(p)[GROUP_CONVENTION]
    g_level = g_level if g_level is not None else level_genus_value(d, p)
    CF = bidegree_identity(1, G)
    vol_C = (2 * g_level - 2) * CF  # C.K with K = (2g - 2) F
    degs = [hecke_degree(m) for m in range(1, hecke_cutoff)]
    mult = (incidence_budget_plus(vol_C, R, hecke_cutoff, p, constants)
            + incidence_budget_minus(vol_C, R, hecke_cutoff, p, degs, constants))
    lower = float(genus_lower(CF, g_level))
    upper = genus_upper(G, k - 1, mult)
    return {"p": p, "group_order": G, "genus_level": g_level, "C_dot_F": CF, "vol_C": vol_C,
            "mult_CM_budget": mult, "genus_lower": lower, "genus_upper": upper}


def threshold_search(k, d, constants=BudgetConstants(), R=4.0, hecke_cutoff=10, p_max=100_000):
    """Smallest prime p (odd, prime to d) with genus_lower > genus_upper."""
    if k < 1:
        raise DomainError("k must be positive")
    catalog_lookup(d)
    assumptions = {"constants": asdict(constants), "R": R, "hecke_cutoff": hecke_cutoff,
                   "p_max": p_max, "group_order": GROUP_CONVENTION, "C_prime_dot_F": 1,
                   "vol_C": "C.K = (2 g_level - 2) C.F", "g_V": k - 1,
                   "mult_CM": "incidence_budget_plus + incidence_budget_minus"}
    p = 3
    while p <= p_max:
        if d % p and is_prime(p):
            terms = threshold_terms(k, d, p, constants, R, hecke_cutoff)
            if terms["genus_lower"] > terms["genus_upper"]:
                return ThresholdReport(k, d, p, "found", assumptions, terms)
        p += 2
    return ThresholdReport(k, d, None, "range exhausted", assumptions)
