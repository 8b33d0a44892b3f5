"""CM points, Heegner/anti-Heegner pairs, repulsion, and Hecke element sets.

A CM pair is carried by a witness (t, u, e, sigma): t is a torsion unit fixing
z, the second point is u z, and u t^e u^-1 = sigma t modulo p.  The tangent
eigenvalue of a lift at its fixed point is the automorphy phase
(cz + d)/|cz + d| of its normalized real matrix.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._exact import nullspace, primitive_integer_vector, prime_factors
from .arithmetic_group import (GroupElement, arithmetic, enumerate_coords, normalize_sign,
                               torsion_classes)
from .errors import DomainError
from .hyperbolic_geom import HPoint, ProductPoint, moebius, uhp_dist
from .quat_algebra import QuatElement, discriminant, real_embedding, split_mod_p

EV_TOL = 1e-8


# ---------------------------------------------------------------------------
# fixed points and eigenvalues

def normalized_matrix(x):
    """phi_D image of x scaled to determinant 1 (x of positive norm)."""
    if isinstance(x, GroupElement):
        return x.matrix
    if isinstance(x, QuatElement):
        if x.reduced_norm() <= 0:
            raise DomainError("element must have positive reduced norm")
        m = real_embedding(x.algebra).matrix(x)
    else:
        m = np.asarray(x, dtype=float)
    det = np.linalg.det(m)
    if det <= 0:
        raise DomainError("matrix must have positive determinant")
    return m / math.sqrt(det)


def fixed_point(t):
    """Fixed point in the upper half-plane of an elliptic element."""
    (a, b), (c, d) = normalized_matrix(t)
    if abs(a + d) >= 2:
        raise DomainError(f"|tr| = {abs(a + d):.6g} >= 2: not elliptic")
    disc = complex((a - d) ** 2 + 4 * b * c)
    z = ((a - d) + np.sqrt(disc)) / (2 * c)
    if z.imag < 0:
        z = ((a - d) - np.sqrt(disc)) / (2 * c)
    return HPoint(complex(z), "UHP")


def automorphy_phase(m, z):
    c, d = m[1]
    j = c * z + d
    return complex(j / abs(j))


def upper_lift(t):
    """The sign of the lift of t whose eigenvalue lies in the upper half circle."""
    rep = t.rep if isinstance(t, GroupElement) else t
    z = fixed_point(rep).value
    ev = automorphy_phase(normalized_matrix(rep), z)
    return rep if ev.imag > 0 else -rep


@dataclass(frozen=True)
class CMPoint:
    stabilizer: GroupElement
    lift: QuatElement
    fixed_point: HPoint
    eigenvalue: complex
    conjugated: bool = False  # True for the copy in the lower half-plane

    @classmethod
    def from_lift(cls, O, lift, z=None):
        z = z or fixed_point(lift)
        m = normalized_matrix(lift)
        fz = moebius(m, z.value)
        if abs(fz - z.value) > 1e-10 * max(1, abs(z.value)):
            raise DomainError("point is not fixed by the stabilizer")
        return cls(GroupElement.from_element(O, lift), lift, z, automorphy_phase(m, z.value))

    def flipped(self):
        """The same stabilizer at the conjugate point: the eigenvalue is conjugated."""
        return CMPoint(self.stabilizer, self.lift, self.fixed_point,
                       self.eigenvalue.conjugate(), not self.conjugated)

    @property
    def order(self):
        return 4 if self.lift.reduced_trace() == 0 else 6

    def to_json(self):
        z = self.fixed_point.value
        return {"stabilizer": [str(c) for c in self.lift.coeffs], "fixed_point": [z.real, z.imag],
                "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
                "conjugated": self.conjugated}


HEEGNER, ANTI_HEEGNER = "Heegner", "AntiHeegner"


def classify_pair(first, second, exponent=1, sign=1, tol=EV_TOL):
    """Heegner iff ev(first) = sign * ev(second)^exponent; anti-Heegner if conjugate.

    ``second.lift`` is the conjugated stabilizer u t u^-1, and the common lift
    at the second point is sign * (u t u^-1)^exponent.
    """
    if first.order != second.order:
        raise DomainError("stabilizers have different orders")
    if exponent not in (1, -1) or sign not in (1, -1):
        raise ValueError("exponent and sign must be +-1")
    target = sign * second.eigenvalue ** exponent
    if abs(first.eigenvalue - target) < tol:
        return HEEGNER
    if abs(first.eigenvalue - target.conjugate()) < tol:
        return ANTI_HEEGNER
    raise DomainError(f"eigenvalues {first.eigenvalue} and {target} match neither value nor conjugate")


@dataclass(frozen=True)
class CMPair:
    first: CMPoint
    second: CMPoint
    conjugator: GroupElement
    conjugator_rep: QuatElement
    level: int
    exponent: int
    sign: int
    label: str

    def flipped(self):
        f = self.first.flipped()
        return CMPair(f, self.second, self.conjugator, self.conjugator_rep, self.level,
                      self.exponent, self.sign, classify_pair(f, self.second, self.exponent, self.sign))

    def to_json(self):
        return {"level": self.level, "label": self.label, "exponent": self.exponent,
                "sign": self.sign, "first": self.first.to_json(), "second": self.second.to_json(),
                "conjugator": [str(c) for c in self.conjugator_rep.coeffs]}


# ---------------------------------------------------------------------------
# scans

def _mod_inv_matrix(m, p):
    """Inverse of 2x2 matrices mod p (vectorized over leading axes)."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    det = (a * d - b * c) % p
    inv = np.vectorize(lambda x: pow(int(x), -1, p))(det)
    adj = np.stack([np.stack([d, -b], -1), np.stack([-c, a], -1)], -2)
    return (adj * inv[..., None, None]) % p


def _canonical(mats, p):
    """Lexicographically least flattening among a list of matrices mod p."""
    flat = [tuple(int(v) for v in (s * m).ravel() % p) for m in mats for s in (1, -1)]
    return min(flat)


def cm_representatives(O, torsion_height=10, conj_height=6):
    """One torsion lift per fixed point class, for both kinds (order 4 then 6)."""
    ar = arithmetic(O)
    reps = []
    for kind in ("order4", "order6"):
        classes = torsion_classes(O, kind, torsion_height, conj_height)
        seen = set()
        for cls in classes:
            key = frozenset(cls)
            if key in seen:
                continue
            t = np.array(cls[0], dtype=np.int64)
            # t and its inverse fix the same point
            inv = tuple(int(v) for v in normalize_sign(ar.conjugate(t))[0])
            partner = next((c for c in classes if inv in c), None)
            seen.add(key)
            if partner is not None:
                seen.add(frozenset(partner))
            reps.append(upper_lift(O.element(cls[0])))
    return reps


def cm_pair_scan(O, p, height=12, torsion_height=10, conj_height=6, reps=None):
    """Scan conjugators u for pairs (z_t, u z_t) with common mod-p stabilizer."""
    split = split_mod_p(O, p)
    U = enumerate_coords(O, 1, height)
    Um = split.matrix_of_coords(U)
    Uinv = _mod_inv_matrix(Um, p)
    reps = reps if reps is not None else cm_representatives(O, torsion_height, conj_height)
    pairs = []
    for t in reps:
        tc = np.array([int(c) for c in O.coords(t)], dtype=np.int64)
        Tm = split.matrix_of_coords(tc)
        powers = [np.linalg.matrix_power(Tm, k) % p for k in range(6)]
        first = CMPoint.from_lift(O, t)
        seen = set()
        for e in (1, -1):
            Te = Tm if e == 1 else _mod_inv_matrix(Tm, p)
            X = (Um @ Te @ Uinv) % p
            for sigma in (1, -1):
                hit = np.all((X - sigma * Tm) % p == 0, axis=(1, 2))
                for idx in np.flatnonzero(hit):
                    key = _canonical([(powers[a] @ Um[idx] @ powers[b]) % p
                                      for a in range(6) for b in range(6)], p)
                    if key in seen:
                        continue
                    seen.add(key)
                    u = O.element(U[idx])
                    conj = u * t * u.inverse()
                    w = HPoint(complex(moebius(normalized_matrix(u), first.fixed_point.value)), "UHP")
                    second = CMPoint.from_lift(O, conj, w)
                    label = classify_pair(first, second, e, sigma)
                    pairs.append(CMPair(first, second, GroupElement(O, tuple(int(v) for v in U[idx])),
                                        u, p, e, sigma, label))
    return pairs


# ---------------------------------------------------------------------------
# repulsion

class RepulsionResult(NamedTuple):
    solution_dim: int
    g: QuatElement | None
    M: int | None
    basis: list
    system: list


def _linear_rows(f, A):
    """Matrix of the linear map g -> f(g) on 1, i, j, ij coefficients."""
    cols = [f(b).coeffs for b in A.basis()]
    return [[cols[k][r] for k in range(4)] for r in range(4)]


def repulsion_solve(t, h_z, h_w, order=None):
    """Solve g t = t g and (h_z g h_w) t = t (h_z g h_w) exactly over Q."""
    A = t.algebra
    rows = _linear_rows(lambda g: g * t - t * g, A)
    rows += _linear_rows(lambda g: (h_z * g * h_w) * t - t * (h_z * g * h_w), A)
    rows = [r for r in rows if any(r)]
    basis = nullspace(rows, 4)
    dim = len(basis)
    if dim == 0:
        return RepulsionResult(0, None, None, [], rows)
    if dim == 2:
        return RepulsionResult(2, None, None, [A.one, t], rows)
    if dim != 1:
        raise DomainError(f"unexpected solution dimension {dim}")
    v = QuatElement(A, tuple(basis[0]))
    if order is not None:
        c = primitive_integer_vector(order.coords(v))
        g = order.element(c)
    else:
        g = QuatElement(A, tuple(Fraction(x) for x in primitive_integer_vector(basis[0])))
    if g.reduced_norm() < 0:
        raise DomainError("solution has negative norm")
    return RepulsionResult(1, g, int(g.reduced_norm()), [g], rows)


# ---------------------------------------------------------------------------
# Hecke sets and degrees

@dataclass
class HeckeSet:
    m: int
    elements: list
    expected: int
    height: int
    order: object = field(repr=False, default=None)

    @property
    def found(self):
        return len(self.elements)

    @property
    def height_limited(self):
        return self.found < self.expected

    def matrices(self):
        return [normalized_matrix(g) for g in self.elements]

    def to_json(self):
        return {"m": self.m, "found": self.found, "expected": self.expected,
                "height": self.height, "height_limited": self.height_limited,
                "elements": [[str(c) for c in g.coeffs] for g in self.elements]}


def hecke_degree(m):
    """prod (q^e + q^(e-1)) over prime powers q^e exactly dividing m."""
    out = 1
    for q in prime_factors(m):
        e = 0
        n = m
        while n % q == 0:
            n //= q
            e += 1
        out *= q ** e + q ** (e - 1)
    return out


def hecke_elements(O, m, height):
    """Norm-m elements of the box modulo left multiplication by norm-1 units.

    g1, g2 are equivalent iff g2 conj(g1) lies in m O.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if math.gcd(m, discriminant(O.algebra)) != 1:
        raise DomainError("m must be coprime to the discriminant")
    ar = arithmetic(O)
    C = enumerate_coords(O, m, height)
    reps = []
    for c in C:
        if reps:
            R = np.array(reps, dtype=np.int64)
            prod = ar.mul(c[None, :], ar.conjugate(R))
            if np.any(np.all(prod % m == 0, axis=1)):
                continue
        reps.append(c)
    return HeckeSet(m, [O.element(c) for c in reps], hecke_degree(m), height, O)


def submodule_count(N, disc=1):
    """Count free rank-1 Z/N-submodules of (Z/N)^2 by brute force.

    Left ideals of M_2(Z/N) are the matrices with rows in a fixed submodule V
    of (Z/N)^2; such an ideal is free of rank 2 exactly when V is free of
    rank 1.  The row spaces of all 2x2 matrices are enumerated through pairs
    of cyclic subgroups.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if math.gcd(N, disc) != 1:
        raise DomainError("N shares a factor with the discriminant")
    vecs = list(itertools.product(range(N), repeat=2))
    cyclic = {}
    for v in vecs:
        cyclic.setdefault(frozenset(((k * v[0]) % N, (k * v[1]) % N) for k in range(N)), v)
    subs = list(cyclic.items())
    found = set()
    for (s1, v1), (s2, _) in itertools.product(subs, repeat=2):
        span = frozenset(((a[0] + b[0]) % N, (a[1] + b[1]) % N) for a in s1 for b in s2)
        if len(span) != N:
            continue
        # free of rank 1: some element has additive order N
        if any(math.gcd(math.gcd(x, y), N) == 1 for x, y in span):
            found.add(span)
    return len(found)


def _as_uhp(p):
    return p.to_uhp().value


def hecke_tube_contains(m, r, point, hecke, tol=0.0):
    """True iff d(g z, w) < r for some g in the Hecke set (normalized action)."""
    if r <= 0:
        return False
    z, w = _as_uhp(point.first), _as_uhp(point.second)
    for g in hecke.elements:
        if g.reduced_norm() != m:
            raise DomainError("Hecke set element of the wrong norm")
        gz = moebius(normalized_matrix(g), z)
        if uhp_dist(gz, w) < r + tol:
            return True
    return False


def single_hecke(g, order=None):
    m = int(g.reduced_norm())
    return HeckeSet(m, [g], hecke_degree(m), 0, order)


# ---------------------------------------------------------------------------
# repulsion experiment

def _proportional_mod_p(split, x, y):
    """Is x = lambda y in M_2(F_p) for some lambda (x, y in 1,i,j,ij coefficients)?"""
    p = split.p
    X = split.matrix_of_coeffs(x.coeffs).ravel()
    Y = split.matrix_of_coeffs(y.coeffs).ravel()
    k = next(i for i in range(4) if Y[i] % p)
    lam = X[k] * pow(int(Y[k]), -1, p) % p
    return bool(np.all((X - lam * Y) % p == 0)) and lam % p != 0


def _commutes_mod_p(split, x, t):
    p = split.p
    X = split.matrix_of_coeffs(x.coeffs)
    T = split.matrix_of_coeffs(t.coeffs)
    return bool(np.all((X @ T - T @ X) % p == 0))


def _is_scalar_mod_p(split, x):
    p = split.p
    X = split.matrix_of_coeffs(x.coeffs)
    return bool(X[0, 1] % p == 0 and X[1, 0] % p == 0 and (X[0, 0] - X[1, 1]) % p == 0 and X[0, 0] % p)


@dataclass
class RepulsionReport:
    p: int
    r: float
    height: int
    hits: list
    redundant: int
    max_M: int | None
    reach: float = 4.0

    def to_json(self):
        return {"p": self.p, "r": self.r, "reach": self.reach, "height": self.height,
                "hits": len(self.hits),
                "redundant": self.redundant, "max_M": self.max_M,
                "M_values": sorted({h["M"] for h in self.hits if h["M"] is not None})}


def repulsion_experiment(O, p, r=1.0, height=12, pairs=None, unit_height=None, reach=4.0):
    """Close distinct Heegner pairs around each scanned Heegner pair.

    For a Heegner witness (t, u) with z fixed by t and w = u z, the nearby
    pair is z' = h_z^-1 z, w' = u h_w z with h_z, h_w units.  Closeness means
    the lifts satisfy sqrt(d(z,z')^2 + d(w,w')^2) < reach * r; the default
    reach 4 is the lift bound for r-balls that meet.  The nearby pair is
    Heegner when h_z u h_w commutes with t mod p.  Each such configuration is
    solved exactly and both pairs are checked to lie on T_M.
    """
    split = split_mod_p(O, p)
    pairs = pairs if pairs is not None else cm_pair_scan(O, p, height)
    units = [O.element(c) for c in enumerate_coords(O, 1, unit_height or height)]
    hits, redundant = [], 0
    for pair in pairs:
        if pair.label != HEEGNER:
            continue
        t = pair.first.lift
        u = pair.conjugator_rep
        z = pair.first.fixed_point.value
        bound = reach * r
        near = []
        for h in units:
            d = float(uhp_dist(moebius(normalized_matrix(h), z), z))
            if d < bound:
                near.append((h, d))
        for (hz, dz), (hw, dw) in itertools.product(near, repeat=2):
            if dz < 1e-9 and dw < 1e-9:
                continue  # same pair
            if dz * dz + dw * dw >= bound * bound:
                continue
            k0 = hz * u * hw
            if not _commutes_mod_p(split, k0, t):
                continue
            res = repulsion_solve(t, hz, hw, O)
            rec = {"t": t, "u": u, "h_z": hz, "h_w": hw, "solution_dim": res.solution_dim,
                   "g": res.g, "M": res.M}
            if res.solution_dim == 2:
                redundant += 1
                rec["checks"] = {}
            elif res.solution_dim == 1:
                rec["checks"] = verify_repulsion_hit(O, split, t, u, hz, hw, res.g, z)
            hits.append(rec)
    Ms = [h["M"] for h in hits if h["M"] is not None]
    return RepulsionReport(p, r, height, hits, redundant, max(Ms) if Ms else None, reach)


def verify_repulsion_hit(O, split, t, u, hz, hw, g, z, tol=1e-6):
    """Exact and numeric checks that both pairs lie on T_M with M = N(g)."""
    M = int(g.reduced_norm())
    k = hz * g * hw
    h1 = u * g.conjugate()
    h2 = u * hw * k.conjugate() * hz
    zp = moebius(normalized_matrix(hz.inverse()), z)
    w = moebius(normalized_matrix(u), z)
    wp = moebius(normalized_matrix(u * hw), z)
    P1 = ProductPoint(HPoint(z, "UHP"), HPoint(complex(w), "UHP"))
    P2 = ProductPoint(HPoint(complex(zp), "UHP"), HPoint(complex(wp), "UHP"))
    return {
        "relation_1": g * t == t * g,
        "relation_2": k * t == t * k,
        "norms": h1.reduced_norm() == M and h2.reduced_norm() == M,
        "integral": O.contains(h1) and O.contains(h2),
        "lift": _proportional_mod_p(split, u, g),
        "scalar_mod_p": _is_scalar_mod_p(split, h1) and _is_scalar_mod_p(split, h2),
        "tube_first": hecke_tube_contains(M, tol, P1, single_hecke(h1, O)),
        "tube_second": hecke_tube_contains(M, tol, P2, single_hecke(h2, O)),
    }
