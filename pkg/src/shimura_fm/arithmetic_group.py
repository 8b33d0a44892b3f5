"""Unit groups of quaternion orders and their principal congruence subgroups.

All searches run over a coefficient box [-height, height]^4 in the basis of
the order, so results depend on the basis.  Elements are identified with
their negatives; the stored sign makes the first nonzero coordinate positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .quat_algebra import LatticeOrder, QuatElement, discriminant, real_embedding, split_mod_p
from .errors import DomainError


# ---------------------------------------------------------------------------
# integer arithmetic in order coordinates

class OrderArithmetic:
    """Structure constants of an order: coords(b_a b_b) = mult[a, b]."""

    def __init__(self, O):
        self.order = O
        e = O.elements()
        mult = np.zeros((4, 4, 4), dtype=np.int64)
        for a in range(4):
            for b in range(4):
                mult[a, b] = [int(c) for c in O.coords(e[a] * e[b])]
        self.mult = mult
        self.conj = np.array([[int(c) for c in O.coords(x.conjugate())] for x in e], dtype=np.int64)
        self.norm_gram = np.array(O.norm_gram(), dtype=np.int64)
        self.traces = np.array(O.traces(), dtype=np.int64)
        self.one = np.array(O.one_coords(), dtype=np.int64)

    def mul(self, x, y):
        """Coordinate products; x, y broadcast over leading axes."""
        return np.einsum("...a,...b,abc->...c", x, y, self.mult)

    def conjugate(self, x):
        return x @ self.conj

    def norm(self, x):
        x = np.asarray(x, dtype=np.int64)
        return np.einsum("...a,ab,...b->...", x, self.norm_gram, x) // 2

    def trace(self, x):
        return np.asarray(x, dtype=np.int64) @ self.traces


@lru_cache(maxsize=32)
def arithmetic(O):
    return OrderArithmetic(O)


def normalize_sign(coords):
    """Flip rows so that the first nonzero coordinate is positive."""
    c = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    nz = c != 0
    first = np.argmax(nz, axis=1)
    lead = c[np.arange(len(c)), first]
    sign = np.where(lead < 0, -1, 1)
    return c * sign[:, None]


def _sorted_unique(c):
    if len(c) == 0:
        return c.reshape(0, 4)
    c = np.unique(c, axis=0)
    return c[np.lexsort(c.T[::-1])]


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A unit of positive norm of an order, taken modulo +-1."""
    order: LatticeOrder
    coords: tuple

    @classmethod
    def from_coords(cls, O, coords):
        c = tuple(int(v) for v in normalize_sign(coords)[0])
        return cls(O, c)

    @classmethod
    def from_element(cls, O, x):
        c = O.coords(x)
        if any(v.denominator != 1 for v in c):
            raise DomainError(f"{x} is not in the order")
        return cls.from_coords(O, [int(v) for v in c])

    @cached_property
    def rep(self) -> QuatElement:
        return self.order.element(self.coords)

    @property
    def trace(self):
        return int(self.rep.reduced_trace())

    @property
    def norm(self):
        return int(self.rep.reduced_norm())

    @cached_property
    def matrix(self):
        """phi_D image rescaled to determinant +1."""
        m = real_embedding(self.order.algebra).matrix(self.rep)
        return m / math.sqrt(abs(np.linalg.det(m)))

    def __mul__(self, other):
        return GroupElement.from_element(self.order, self.rep * other.rep)

    def inverse(self):
        return GroupElement.from_element(self.order, self.rep.inverse())

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.order is other.order and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def to_json(self):
        return {"coords": list(self.coords), "trace": self.trace, "norm": self.norm}

    def __repr__(self):
        return f"GroupElement{self.coords}"


class CongruenceTag(NamedTuple):
    p: int
    in_kernel: bool


# ---------------------------------------------------------------------------
# box enumeration

class _Box:
    """Precomputed partial norms/traces over the last three coordinates."""

    def __init__(self, O, height):
        ar = arithmetic(O)
        h = height
        r = np.arange(-h, h + 1, dtype=np.int64)
        g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        T = ar.norm_gram
        self.grid = g
        self.q = np.einsum("na,ab,nb->n", g, T[1:, 1:], g)
        self.lin = g @ T[0, 1:]
        self.t00 = T[0, 0]
        self.tr_rest = g @ ar.traces[1:]
        self.tr0 = ar.traces[0]
        self.height = h

    def search(self, norm, traces=None):
        out = []
        target = 2 * norm
        for c0 in range(0, self.height + 1):
            two_n = self.t00 * c0 * c0 + 2 * c0 * self.lin + self.q
            mask = two_n == target
            if traces is not None:
                tr = self.tr0 * c0 + self.tr_rest
                mask &= np.isin(tr, traces)
            if not mask.any():
                continue
            rows = np.hstack([np.full((mask.sum(), 1), c0, dtype=np.int64), self.grid[mask]])
            out.append(rows)
        if not out:
            return np.zeros((0, 4), dtype=np.int64)
        c = normalize_sign(np.vstack(out))
        c = c[np.any(c != 0, axis=1)]
        return _sorted_unique(c)


@lru_cache(maxsize=16)
def _box(O, height):
    return _Box(O, height)


def enumerate_coords(O, norm, height, traces=None):
    """Sign-normalized order coordinates of elements of the given norm in the box."""
    if height <= 0:
        return np.zeros((0, 4), dtype=np.int64)
    return _box(O, height).search(norm, None if traces is None else tuple(traces))


def enumerate_elements(O, norm, height):
    """Elements of reduced norm ``norm`` with coordinates in [-height, height]^4.

    Deduplicated up to sign, lexicographic in coordinates, zero excluded.
    """
    return [O.element(c) for c in enumerate_coords(O, norm, height)]


def units(O, height, norm=1):
    return [GroupElement(O, tuple(int(v) for v in c)) for c in enumerate_coords(O, norm, height)]


def unit_norm_minus_one_exists(O, height):
    """(found, witness).  A negative answer only covers the searched box."""
    c = enumerate_coords(O, -1, height)
    if len(c) == 0:
        return False, None
    return True, O.element(c[0])


# ---------------------------------------------------------------------------
# congruence subgroups

def is_congruent_to_identity(split, coords):
    m = split.matrix_of_coords(coords)
    p = split.p
    off = (m[..., 0, 1] % p == 0) & (m[..., 1, 0] % p == 0)
    diag = m[..., 0, 0] % p
    return off & (diag == m[..., 1, 1] % p) & ((diag == 1) | (diag == p - 1))


def congruence_filter(elems, p):
    """Elements whose image in (O (x) F_p)^* is +-1."""
    if not elems:
        return []
    O = elems[0].order
    split = split_mod_p(O, p)
    coords = np.array([e.coords for e in elems], dtype=np.int64)
    keep = is_congruent_to_identity(split, coords)
    return [e for e, k in zip(elems, keep) if k]


def congruence_tag(g, p):
    return CongruenceTag(p, bool(congruence_filter([g], p)))


def congruence_coords(O, p, height):
    """Norm-1 elements of the box that are +-1 mod p, excluding +-1.

    Equivalent to filtering the whole box, but only visits coordinates in
    the classes +-one_coords mod p.
    """
    split_mod_p(O, p)  # validates p
    ar = arithmetic(O)
    e = ar.one
    found = []
    for s in (1, -1):
        base = s * e
        lo = np.ceil((-height - base) / p).astype(int)
        hi = np.floor((height - base) / p).astype(int)
        axes = [np.arange(l, h + 1, dtype=np.int64) for l, h in zip(lo, hi)]
        b = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
        c = base + p * b
        c = c[ar.norm(c) == 1]
        found.append(c)
    c = normalize_sign(np.vstack(found))
    c = c[~np.all(c == normalize_sign(e)[0], axis=1)]
    return _sorted_unique(c)


def congruence_elements(O, p, height):
    return [GroupElement(O, tuple(int(v) for v in c)) for c in congruence_coords(O, p, height)]


def min_congruence_trace(O, p, height):
    """min |tr| over nontrivial elements of Gamma(p) in the box, or None."""
    c = congruence_coords(O, p, height)
    if len(c) == 0:
        return None
    return int(np.abs(arithmetic(O).trace(c)).min())


def congruence_trace_law(O, p, height):
    """Check tr(gamma) = 2 mod p^2 for the representative gamma = +1 mod p.

    Returns the list of violating elements (empty when the law holds).
    """
    split = split_mod_p(O, p)
    ar = arithmetic(O)
    bad = []
    for c in congruence_coords(O, p, height):
        m = split.matrix_of_coords(c)
        sign = 1 if m[0, 0] % p == 1 else -1
        t = sign * int(ar.trace(c))
        if (t - 2) % (p * p):
            bad.append(GroupElement(O, tuple(int(v) for v in c)))
    return bad


def displacement_lower(gamma):
    """arcosh(tr(gamma^2)/2) = arcosh((tr^2 - 2)/2) for a norm-1 hyperbolic element.

    Accepts a GroupElement, a QuatElement or the trace itself.
    """
    if isinstance(gamma, GroupElement):
        t = gamma.trace
    elif isinstance(gamma, QuatElement):
        if gamma.reduced_norm() != 1:
            raise DomainError("displacement bound is stated for norm-1 elements")
        t = gamma.reduced_trace()
    else:
        t = gamma
    t = float(t)
    if abs(t) <= 2:
        raise DomainError(f"|tr| = {abs(t)} <= 2: element is not hyperbolic")
    return math.acosh((t * t - 2) / 2)


def min_displacement_numeric(trace, grid=400):
    """min_z d(z, gamma z) for the diagonal representative diag(a, 1/a), by grid search."""
    t = abs(float(trace))
    a = (t + math.sqrt(t * t - 4)) / 2
    xs = np.linspace(-3, 3, grid)
    ys = np.exp(np.linspace(-3, 3, grid))
    X, Y = np.meshgrid(xs, ys)
    z = X + 1j * Y
    w = a * a * z  # diag(a, 1/a) acts as z -> a^2 z
    d = np.arccosh(1 + np.abs(z - w) ** 2 / (2 * z.imag * w.imag))
    return float(d.min())


# ---------------------------------------------------------------------------
# torsion

TORSION_TRACES = {"order4": (0,), "order6": (1, -1)}


def torsion_coords(O, kind, height):
    if kind not in TORSION_TRACES:
        raise ValueError("kind must be 'order4' or 'order6'")
    return enumerate_coords(O, 1, height, traces=TORSION_TRACES[kind])


def torsion_elements(O, kind, height):
    """Norm-1 elements with trace 0 (order 4) or trace +-1 (order 6), up to sign."""
    return [GroupElement(O, tuple(int(v) for v in c)) for c in torsion_coords(O, kind, height)]


def _encode(c, base):
    c = np.asarray(c, dtype=np.int64) + base // 2
    return ((c[..., 0] * base + c[..., 1]) * base + c[..., 2]) * base + c[..., 3]


def torsion_classes(O, kind, height, conj_height=None):
    """Partition the box torsion elements into conjugacy classes under norm-1 units.

    Returns a list of classes (lists of coordinate tuples), largest first.
    """
    conj_height = conj_height or height
    T = torsion_coords(O, kind, height)
    if len(T) == 0:
        return []
    U = enumerate_coords(O, 1, conj_height)
    ar = arithmetic(O)
    base = 2 * height + 1  # only conjugates inside the box are encoded
    keys = _encode(T, base)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    parent = list(range(len(T)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    ubar = ar.conjugate(U)
    for idx, t in enumerate(T):
        s = ar.mul(ar.mul(U, t[None, :]), ubar)
        s = normalize_sign(s)
        inside = np.all(np.abs(s) <= height, axis=1)
        if not inside.any():
            continue
        k = _encode(s[inside], base)
        pos = np.searchsorted(sorted_keys, k)
        pos = np.clip(pos, 0, len(sorted_keys) - 1)
        hit = sorted_keys[pos] == k
        for j in set(order[pos[hit]].tolist()):
            ra, rb = find(idx), find(j)
            if ra != rb:
                parent[rb] = ra
    classes = {}
    for idx in range(len(T)):
        classes.setdefault(find(idx), []).append(tuple(int(v) for v in T[idx]))
    return sorted(classes.values(), key=lambda c: (-len(c), c[0]))


def elliptic_class_counts(O, height, conj_height=None):
    """(e2, e3) from conjugacy classes of torsion in the box.

    An order-3 rotation and its inverse are never conjugate by
    orientation-preserving maps, so e3 is half the class count of trace +-1
    elements.  Both numbers are certificates only for the searched box.
    """
    if height <= 0:
        return 0, 0
    c4 = torsion_classes(O, "order4", height, conj_height)
    c6 = torsion_classes(O, "order6", height, conj_height)
    return len(c4), len(c6) // 2


class ComponentStructure(NamedTuple):
    copies: int
    one_sided: bool
    witness: QuatElement | None


def component_structure(O, p, height=10):
    """Number of copies of H+- needed for the level-p curve (1 or 2)."""
    if p % 2 == 0:
        raise DomainError("p must be odd")
    found, witness = unit_norm_minus_one_exists(O, height)
    if found and p % 4 == 3:
        return ComponentStructure(1, False, witness)
    return ComponentStructure(2, not found, witness)


def congruent_to_pm_one(O, coords, p):
    """Coordinate test for x = +-1 in O/pO; valid at split and ramified p alike."""
    c = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    one = arithmetic(O).one
    return (((c - one) % p == 0).all(axis=1)) | (((c + one) % p == 0).all(axis=1))


def _pm_key(v, p):
    a = tuple(int(x) % p for x in v)
    b = tuple(-int(x) % p for x in v)
    return min(a, b)


def reduction_image(O, gens, p, limit=2_000_000):
    """Subgroup of (O/pO)^*/{+-1} generated by the images of ``gens`` (breadth first)."""
    A = arithmetic(O)
    g = np.array([x.coords for x in gens], dtype=np.int64) % p
    start = A.one % p
    seen = {_pm_key(start, p)}
    frontier = start[None, :]
    while len(frontier):
        prods = A.mul(frontier[:, None, :], g[None, :, :]).reshape(-1, 4) % p
        nxt = []
        for v in prods:
            k = _pm_key(v, p)
            if k not in seen:
                seen.add(k)
                nxt.append(v)
        if len(seen) > limit:
            raise RuntimeError("closure exceeded limit")
        frontier = np.array(nxt, dtype=np.int64).reshape(-1, 4)
    return seen


def norm_one_image_order(O, p):
    """|O^1/(1 + pO)^1| modulo +-1, as predicted by strong approximation.

    Split p gives PSL_2(F_p); at ramified p the norm-1 units of O_p/p^2 have
    order (p+1)p^2.
    """
    if discriminant(O.algebra) % p == 0:
        return (p + 1) * p * p // 2
    return p * (p * p - 1) // 2


def unit_generators(O, height=2):
    """A small deterministic set of norm-1 units (candidate generators)."""
    return units(O, height)
