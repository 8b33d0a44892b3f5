"""Exact arithmetic in rational quaternion algebras (alpha, beta).

Elements are stored as coefficient 4-tuples on the basis 1, i, j, ij with
i^2 = alpha, j^2 = beta, ij = -ji.  Everything here is exact (Fractions);
the only floating-point objects are the real embedding matrices.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt, prod

import numpy as np

from ._exact import (
    common_denominator,
    det,
    frac_mod,
    fraction_str,
    prime_factors,
    rational_hnf,
    solve,
    to_fraction,
)
from .errors import DomainError


@dataclass(frozen=True)
class QuatAlgebra:
    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        a, b = to_fraction(self.alpha), to_fraction(self.beta)
        if a == 0 or b == 0:
            raise DomainError("quaternion algebra parameters must be nonzero")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def element(self, *coeffs):
        if len(coeffs) == 1 and not isinstance(coeffs[0], (int, Fraction, str)):
            coeffs = tuple(coeffs[0])
        return QuatElement(self, tuple(to_fraction(c) for c in coeffs))

    def scalar(self, a):
        return self.element(a, 0, 0, 0)

    @property
    def one(self):
        return self.scalar(1)

    @property
    def i(self):
        return self.element(0, 1, 0, 0)

    @property
    def j(self):
        return self.element(0, 0, 1, 0)

    @property
    def ij(self):
        return self.element(0, 0, 0, 1)

    def basis(self):
        return [self.one, self.i, self.j, self.ij]

    def to_json(self):
        return {"alpha": fraction_str(self.alpha), "beta": fraction_str(self.beta)}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(Fraction(data["alpha"]), Fraction(data["beta"]))

    def __repr__(self):
        return f"QuatAlgebra({self.alpha}, {self.beta})"


@dataclass(frozen=True)
class QuatElement:
    algebra: QuatAlgebra
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != 4:
            raise ValueError("a quaternion has exactly four coefficients")

    def _check(self, other):
        if not isinstance(other, QuatElement):
            return self.algebra.scalar(other)
        if other.algebra != self.algebra:
            raise DomainError("elements belong to different quaternion algebras")
        return other

    def __add__(self, other):
        other = self._check(other)
        return QuatElement(self.algebra, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return QuatElement(self.algebra, tuple(-x for x in self.coeffs))

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, QuatElement):
            s = to_fraction(other)
            return QuatElement(self.algebra, tuple(x * s for x in self.coeffs))
        other = self._check(other)
        al, be = self.algebra.alpha, self.algebra.beta
        a0, a1, a2, a3 = self.coeffs
        b0, b1, b2, b3 = other.coeffs
        return QuatElement(self.algebra, (
            a0 * b0 + al * a1 * b1 + be * a2 * b2 - al * be * a3 * b3,
            a0 * b1 + a1 * b0 - be * a2 * b3 + be * a3 * b2,
            a0 * b2 + a2 * b0 + al * a1 * b3 - al * a3 * b1,
            a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1,
        ))

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, s):
        s = to_fraction(s)
        return QuatElement(self.algebra, tuple(x / s for x in self.coeffs))

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.algebra.one
        for _ in range(n):
            out = out * self
        return out

    def conjugate(self):
        a, b, c, d = self.coeffs
        return QuatElement(self.algebra, (a, -b, -c, -d))

    def reduced_trace(self):
        return 2 * self.coeffs[0]

    def reduced_norm(self):
        a, b, c, d = self.coeffs
        al, be = self.algebra.alpha, self.algebra.beta
        return a * a - al * b * b - be * c * c + al * be * d * d

    def inverse(self):
        n = self.reduced_norm()
        if n == 0:
            raise ZeroDivisionError("element of reduced norm 0 is not invertible")
        return self.conjugate() / n

    def is_scalar(self):
        return not any(self.coeffs[1:])

    def is_zero(self):
        return not any(self.coeffs)

    def to_json(self):
        return [fraction_str(c) for c in self.coeffs]

    def __repr__(self):
        names = ("", "i", "j", "ij")
        parts = [f"{c}{'*' + n if n else ''}" for c, n in zip(self.coeffs, names) if c]
        return "(" + (" + ".join(parts) if parts else "0") + ")"


def mul(x, y):
    return x * y


def conjugate(x):
    return x.conjugate()


def reduced_trace(x):
    return x.reduced_trace()


def reduced_norm(x):
    return x.reduced_norm()


# ---------------------------------------------------------------------------
# Local invariants

@dataclass(frozen=True)
class Place:
    """A place of Q: a prime q, or the real place when q is None."""
    q: int | None = None

    def __post_init__(self):
        if self.q is not None:
            from ._exact import is_prime
            if not is_prime(self.q):
                raise ValueError(f"{self.q} is not prime")

    @property
    def is_infinite(self):
        return self.q is None

    def __str__(self):
        return "inf" if self.q is None else str(self.q)

    def __lt__(self, other):
        return _place_key(self) < _place_key(other)


INF = Place(None)


def _place_key(v):
    return (1, 0) if v.q is None else (0, v.q)


def _place(v):
    if isinstance(v, Place):
        return v
    if v in ("inf", "oo", None) or (isinstance(v, float) and v == float("inf")):
        return INF
    return Place(int(v))


def squarefree_part(a):
    """Squarefree integer in the square class of the nonzero rational a."""
    a = to_fraction(a)
    if a == 0:
        raise DomainError("zero has no square class")
    n = a.numerator * a.denominator
    sign = -1 if n < 0 else 1
    n = abs(n)
    out = 1
    for q in prime_factors(n):
        e = 0
        while n % q == 0:
            n //= q
            e += 1
        if e % 2:
            out *= q
    return sign * out


def _ord(n, q):
    n = abs(n)
    e = 0
    while n and n % q == 0:
        n //= q
        e += 1
    return e


def hilbert_symbol(a, b, v):
    """(a, b)_v by brute-force primitive solvability of a x^2 + b y^2 = z^2.

    At a prime q the search runs modulo q^k with k = 2 ord_q(4ab) + 1 after
    reducing a, b to squarefree integers; Hensel lifting makes that modulus
    sufficient.
    """
    if to_fraction(a) == 0 or to_fraction(b) == 0:
        raise DomainError("Hilbert symbol needs nonzero arguments")
    v = _place(v)
    a, b = squarefree_part(a), squarefree_part(b)
    if v.is_infinite:
        return -1 if (a < 0 and b < 0) else 1
    return _hilbert_finite(a, b, v.q)


@lru_cache(maxsize=4096)
def _hilbert_finite(a, b, q):
    if a % q == 0 and b % q == 0:
        # (a, b) = (a, -ab) lowers ord_q(4ab) and hence the search modulus
        b = squarefree_part(-a * b)
    k = 2 * _ord(4 * a * b, q) + 1
    m = q ** k
    r = np.arange(m, dtype=np.int64)
    is_square = np.zeros(m, dtype=bool)
    is_square[(r * r) % m] = True
    # a primitive solution has x or y a unit; scaling by its inverse sets it to 1
    if is_square[(a + b * r * r) % m].any():
        return 1
    rq = r[r % q == 0]
    if is_square[(a * rq * rq + b) % m].any():
        return 1
    return -1


def hilbert_symbol_formula(a, b, q):
    """Closed-form (a, b)_q via Legendre symbols; an independent check."""
    a, b = squarefree_part(a), squarefree_part(b)
    if q is None:
        return -1 if (a < 0 and b < 0) else 1
    al, u = _ord(a, q), a // q ** _ord(a, q)
    be, w = _ord(b, q), b // q ** _ord(b, q)
    if q == 2:
        eps = lambda n: ((n - 1) // 2) % 2
        om = lambda n: ((n * n - 1) // 8) % 2
        e = (eps(u) * eps(w) + al * om(w) + be * om(u)) % 2
        return -1 if e else 1

    def leg(n):
        r = pow(n % q, (q - 1) // 2, q)
        return -1 if r == q - 1 else 1

    s = (-1) ** (al * be * ((q - 1) // 2) % 2)
    return s * leg(u) ** be * leg(w) ** al


def candidate_primes(a, b):
    n = 2
    for x in (to_fraction(a), to_fraction(b)):
        n *= x.numerator * x.denominator
    return prime_factors(n)


def ramified_places(A):
    out = {Place(q) for q in candidate_primes(A.alpha, A.beta)
           if hilbert_symbol(A.alpha, A.beta, q) == -1}
    if hilbert_symbol(A.alpha, A.beta, INF) == -1:
        out.add(INF)
    return frozenset(out)


def discriminant(A):
    return prod(v.q for v in ramified_places(A) if not v.is_infinite)


def is_indefinite(A):
    return INF not in ramified_places(A)


# ---------------------------------------------------------------------------
# Orders

@dataclass(frozen=True, eq=False)
class LatticeOrder:
    """A rank-4 Z-lattice in (alpha, beta) that is a ring containing 1.

    ``basis`` rows are basis elements in 1, i, j, ij coordinates.
    """
    algebra: QuatAlgebra
    basis: tuple
    _inv: tuple = field(init=False, repr=False)

    def __init__(self, algebra, basis, check=True):
        rows = tuple(tuple(to_fraction(x) for x in row) for row in basis)
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("an order basis is a 4x4 matrix")
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "basis", rows)
        if det(rows) == 0:
            raise DomainError("order basis is degenerate")
        # coords c satisfy c @ basis = x, i.e. basis^T c = x
        bt = [list(col) for col in zip(*rows)]
        inv_cols = [solve(bt, [int(i == k) for i in range(4)]) for k in range(4)]
        inv_rows = tuple(tuple(inv_cols[k][r] for k in range(4)) for r in range(4))
        object.__setattr__(self, "_inv", inv_rows)
        if check:
            self._validate()

    def __eq__(self, other):
        return (isinstance(other, LatticeOrder) and self.algebra == other.algebra
                and self.same_lattice(other))

    def __hash__(self):
        return hash((self.algebra, tuple(map(tuple, rational_hnf(self.basis)))))

    def _validate(self):
        if not self.contains(self.algebra.one):
            raise DomainError("lattice does not contain 1")
        for x in self.elements():
            if x.reduced_trace().denominator != 1 or x.reduced_norm().denominator != 1:
                raise DomainError(f"basis element {x} is not integral")
        for x, y in itertools.product(self.elements(), repeat=2):
            if not self.contains(x * y):
                raise DomainError(f"lattice is not closed under multiplication: {x}*{y}")

    def elements(self):
        return [QuatElement(self.algebra, row) for row in self.basis]

    def element(self, coords):
        c = [to_fraction(v) for v in coords]
        return QuatElement(self.algebra, tuple(
            sum((c[k] * self.basis[k][m] for k in range(4)), Fraction(0)) for m in range(4)))

    def coords(self, x):
        return [sum((self._inv[k][m] * x.coeffs[m] for m in range(4)), Fraction(0))
                for k in range(4)]

    def contains(self, x):
        return all(c.denominator == 1 for c in self.coords(x))

    def contains_order(self, other):
        return all(self.contains(x) for x in other.elements())

    def same_lattice(self, other):
        return self.contains_order(other) and other.contains_order(self)

    def trace_gram(self):
        e = self.elements()
        return [[(x * y).reduced_trace() for y in e] for x in e]

    def norm_gram(self):
        """Integer matrix T with 2 N(sum c_k b_k) = c^T T c."""
        e = self.elements()
        return [[int((x * y.conjugate()).reduced_trace()) for y in e] for x in e]

    def traces(self):
        return [int(x.reduced_trace()) for x in self.elements()]

    def one_coords(self):
        return [int(c) for c in self.coords(self.algebra.one)]

    def to_json(self):
        return {"algebra": self.algebra.to_json(),
                "basis": [fraction_str(x) for row in self.basis for x in row]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        A = QuatAlgebra.from_json(data["algebra"])
        flat = [Fraction(s) for s in data["basis"]]
        if len(flat) != 16:
            raise ValueError("order basis must have 16 entries")
        return cls(A, [flat[4 * r:4 * r + 4] for r in range(4)])

    @classmethod
    def standard(cls, A):
        """Z<1, i, j, ij>, defined when alpha and beta are integers."""
        return cls(A, [[int(r == c) for c in range(4)] for r in range(4)])

    def __repr__(self):
        rows = ", ".join("(" + ", ".join(str(x) for x in r) + ")" for r in self.basis)
        return f"LatticeOrder({self.algebra!r}, [{rows}])"


def order_discriminant(O):
    """Reduced discriminant: the positive integer whose square is |det(tr(b_k b_l))|."""
    d = abs(det(O.trace_gram()))
    if d.denominator != 1 or isqrt(d.numerator) ** 2 != d.numerator:
        raise DomainError(f"trace-form determinant {d} is not a perfect square")
    return isqrt(d.numerator)


def is_maximal(O):
    return order_discriminant(O) == discriminant(O.algebra)


def _ring_closure(algebra, rows, max_rounds=8):
    rows = rational_hnf(rows)
    for _ in range(max_rounds):
        elems = [QuatElement(algebra, tuple(r)) for r in rows]
        gens = [list(r) for r in rows] + [list((x * y).coeffs) for x in elems for y in elems]
        new = rational_hnf(gens)
        if new == rows:
            return rows
        rows = new
    return None


def _try_order(algebra, rows):
    try:
        return LatticeOrder(algebra, rows)
    except DomainError:
        return None


def maximalize(O):
    """A maximal order containing O, by prime-by-prime saturation."""
    target = discriminant(O.algebra)
    current = O
    while True:
        rd = order_discriminant(current)
        if rd == target:
            return current
        if rd % target:
            raise DomainError(f"reduced discriminant {rd} is not a multiple of {target}")
        improved = None
        for q in prime_factors(rd // target):
            for c in itertools.product(range(q), repeat=4):
                if not any(c):
                    continue
                x = current.element([Fraction(v, q) for v in c])
                if x.reduced_trace().denominator != 1 or x.reduced_norm().denominator != 1:
                    continue
                rows = _ring_closure(O.algebra, [list(r) for r in current.basis] + [list(x.coeffs)])
                if rows is None or len(rows) != 4:
                    continue
                cand = _try_order(O.algebra, rows)
                if cand is not None and order_discriminant(cand) < rd:
                    improved = cand
                    break
            if improved is not None:
                break
        if improved is None:
            raise DomainError(f"no enlargement found at reduced discriminant {rd}")
        current = improved


@lru_cache(maxsize=64)
def maximal_order(alpha, beta):
    """Deterministic maximal order of (alpha, beta), built from Z<1,i,j,ij>.

    Non-integral parameters are first cleared by the scalings i -> n i, j -> m j
    which change the presentation but not the algebra; callers that need a
    particular presentation should call ``maximalize`` themselves.
    """
    A = QuatAlgebra(Fraction(alpha), Fraction(beta))
    if A.alpha.denominator != 1 or A.beta.denominator != 1:
        raise DomainError("maximal_order expects integral alpha, beta")
    return with_one_first(maximalize(LatticeOrder.standard(A)))


def with_one_first(O):
    """Same lattice, basis (1, ...) obtained by swapping 1 for one HNF row."""
    one = list(O.algebra.one.coeffs)
    rows = [list(r) for r in O.basis]
    if rows[0] == one:
        return O
    target = abs(det(rows))
    for k in range(4):
        cand = [one] + rows[:k] + rows[k + 1:]
        if abs(det(cand)) == target:
            return LatticeOrder(O.algebra, cand)
    return O


# Presentations used for the bundled discriminants.
STANDARD_PRESENTATIONS = {6: (-1, 3), 10: (-2, 5), 22: (-1, 11)}


def standard_algebra(d):
    if d not in STANDARD_PRESENTATIONS:
        raise DomainError(f"no bundled presentation for discriminant {d}")
    return QuatAlgebra(*STANDARD_PRESENTATIONS[d])


def standard_order(d):
    """Deterministic maximal order for a bundled discriminant."""
    A = standard_algebra(d)
    return maximal_order(A.alpha, A.beta)


# ---------------------------------------------------------------------------
# 2x2 matrices over an explicit coefficient domain

@dataclass(frozen=True)
class QuadNumber:
    """u + v sqrt(d) in Q(sqrt d) with d a non-square rational."""
    u: Fraction
    v: Fraction
    d: Fraction

    def _lift(self, o):
        if isinstance(o, QuadNumber):
            if o.d != self.d:
                raise DomainError("different quadratic fields")
            return o
        return QuadNumber(to_fraction(o), Fraction(0), self.d)

    def __add__(self, o):
        o = self._lift(o)
        return QuadNumber(self.u + o.u, self.v + o.v, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadNumber(-self.u, -self.v, self.d)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __mul__(self, o):
        o = self._lift(o)
        return QuadNumber(self.u * o.u + self.d * self.v * o.v, self.u * o.v + self.v * o.u, self.d)

    __rmul__ = __mul__

    def conj(self):
        return QuadNumber(self.u, -self.v, self.d)

    def __eq__(self, o):
        if not isinstance(o, QuadNumber):
            try:
                o = self._lift(o)
            except TypeError:
                return NotImplemented
        return (self.u, self.v, self.d) == (o.u, o.v, o.d)

    def __hash__(self):
        return hash((self.u, self.v, self.d))

    def __float__(self):
        return float(self.u) + float(self.v) * float(self.d) ** 0.5


DOMAINS = ("Q", "K", "R", "Fp")


@dataclass(frozen=True)
class MatrixRep2:
    """2x2 matrix ((a, b), (c, d)) over a declared domain.

    ``modulus`` is the prime for "Fp"; ``field_d`` the radicand for "K".
    """
    entries: tuple
    domain: str
    modulus: int | None = None
    field_d: Fraction | None = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown coefficient domain {self.domain!r}")
        if self.domain == "Fp":
            object.__setattr__(self, "entries", tuple(int(e) % self.modulus for e in self.entries))

    @property
    def tag(self):
        return (self.domain, self.modulus, self.field_d)

    def _same(self, other):
        if not isinstance(other, MatrixRep2) or other.tag != self.tag:
            raise DomainError("mixed-domain matrix arithmetic is rejected")

    def __matmul__(self, other):
        self._same(other)
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return MatrixRep2((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h),
                          self.domain, self.modulus, self.field_d)

    __mul__ = __matmul__

    def __add__(self, other):
        self._same(other)
        return MatrixRep2(tuple(x + y for x, y in zip(self.entries, other.entries)),
                          self.domain, self.modulus, self.field_d)

    def scale(self, s):
        return MatrixRep2(tuple(s * x for x in self.entries), self.domain, self.modulus, self.field_d)

    def det(self):
        a, b, c, d = self.entries
        r = a * d - b * c
        return r % self.modulus if self.domain == "Fp" else r

    def trace(self):
        a, _, _, d = self.entries
        r = a + d
        return r % self.modulus if self.domain == "Fp" else r

    def to_numpy(self):
        if self.domain == "Fp":
            return np.array(self.entries, dtype=np.int64).reshape(2, 2)
        return np.array([float(x) for x in self.entries]).reshape(2, 2)

    def __eq__(self, other):
        return isinstance(other, MatrixRep2) and self.tag == other.tag and self.entries == other.entries

    def __hash__(self):
        return hash((self.entries, self.tag))


def identity_matrix(domain, modulus=None, field_d=None):
    one = QuadNumber(Fraction(1), Fraction(0), field_d) if domain == "K" else 1
    zero = QuadNumber(Fraction(0), Fraction(0), field_d) if domain == "K" else 0
    return MatrixRep2((one, zero, zero, one), domain, modulus, field_d)


def _is_rational_square(x):
    x = to_fraction(x)
    if x < 0:
        return False
    n, d = x.numerator, x.denominator
    return isqrt(n) ** 2 == n and isqrt(d) ** 2 == d


def left_regular_rep(x):
    """Left multiplication by x on D = K + jK, K = Q(i) = Q(sqrt alpha).

    For x = u + v j with u = a + b i, v = c + d i:
        L(x) = [[u, beta v], [conj(v), conj(u)]],
    so det L = N(x) and tr L = tr(x).
    """
    A = x.algebra
    if _is_rational_square(A.alpha):
        raise DomainError("alpha is a square: the algebra is split, use the split matrix form")
    a, b, c, d = x.coeffs
    K = lambda s, t: QuadNumber(s, t, A.alpha)
    u, v = K(a, b), K(c, d)
    return MatrixRep2((u, v * A.beta, v.conj(), u.conj()), "K", field_d=A.alpha)


def split_matrix_form(x):
    """Exact matrix for (1, 1) = M_2(Q): i -> diag(1,-1), j -> [[0,1],[1,0]]."""
    A = x.algebra
    if A.alpha != 1 or A.beta != 1:
        raise DomainError("split_matrix_form is defined for the presentation (1, 1)")
    a, b, c, d = x.coeffs
    return MatrixRep2((a + b, c + d, c - d, a - b), "Q")


class RealEmbedding:
    """Deterministic isomorphism D (x) R -> M_2(R).

    With alpha > 0 the regular representation is used with sqrt(alpha) real.
    With alpha < 0 < beta the generators are first exchanged,
    (i, j) -> (j, i), giving the presentation (beta, alpha).
    """

    def __init__(self, A):
        if not is_indefinite(A):
            raise DomainError(f"{A!r} is definite and has no real splitting")
        self.algebra = A
        self.swapped = A.alpha < 0
        al, be = (A.beta, A.alpha) if self.swapped else (A.alpha, A.beta)
        self.sqrt_alpha = float(al) ** 0.5
        self.beta = float(be)
        s, bt = self.sqrt_alpha, self.beta
        # matrices of the images of 1, i, j, ij
        if not self.swapped:
            mats = [
                [[1, 0], [0, 1]],
                [[s, 0], [0, -s]],
                [[0, bt], [1, 0]],
                [[0, bt * s], [-s, 0]],
            ]
        else:
            # x = a + b i + c j + d ij = a + c i' + b j' - d i'j'
            mats = [
                [[1, 0], [0, 1]],
                [[0, bt], [1, 0]],
                [[s, 0], [0, -s]],
                [[0, -bt * s], [s, 0]],
            ]
        self.basis_mats = np.array(mats, dtype=float)

    def matrix(self, x):
        c = np.array([float(v) for v in x.coeffs])
        return np.tensordot(c, self.basis_mats, axes=1)

    def matrices(self, coeff_array):
        """Vectorized images of an (n, 4) array of 1, i, j, ij coefficients."""
        return np.tensordot(np.asarray(coeff_array, dtype=float), self.basis_mats, axes=1)

    def __call__(self, x):
        m = self.matrix(x)
        return MatrixRep2(tuple(m.ravel()), "R")


@lru_cache(maxsize=32)
def real_embedding(A):
    return RealEmbedding(A)


# ---------------------------------------------------------------------------
# Splitting modulo p

class SplitModP:
    """Ring isomorphism O (x) F_p -> M_2(F_p) for odd p not dividing disc(A)."""

    def __init__(self, O, p):
        A = O.algebra
        if p == 2:
            raise DomainError("splitting mod 2 is not supported")
        if discriminant(A) % p == 0:
            raise DomainError(f"{p} divides the discriminant; the algebra is ramified there")
        den = common_denominator([x for row in O.basis for x in row])
        if den % p == 0:
            raise DomainError(f"order basis has denominators divisible by {p}")
        self.order, self.p = O, p
        al, be = A.alpha, A.beta
        if al.denominator % p == 0 or be.denominator % p == 0:
            raise DomainError(f"presentation has denominators divisible by {p}")
        a_mod, b_mod = frac_mod(al, p), frac_mod(be, p)
        if a_mod:
            I, J = _anticommuting_pair(a_mod, b_mod, p)
        elif b_mod:
            Jp, Ip = _anticommuting_pair(b_mod, a_mod, p)
            I, J = Ip, Jp
        else:
            raise DomainError(f"both parameters vanish mod {p}; choose another presentation")
        self.I, self.J = I, J
        self.IJ = (I @ J) % p
        self.unit_images = np.array([np.eye(2, dtype=np.int64), I, J, self.IJ])
        coeffs = np.array([[frac_mod(x, p) for x in row] for row in O.basis], dtype=np.int64)
        self.basis_images = np.tensordot(coeffs, self.unit_images, axes=1) % p
        flat = self.basis_images.reshape(4, 4)
        if _rank_mod_p(flat, p) != 4:
            raise DomainError(f"order does not map isomorphically onto M_2(F_{p})")

    def matrix_of_coeffs(self, coeffs):
        """Image of the element with 1, i, j, ij coefficients ``coeffs``."""
        c = np.array([frac_mod(x, self.p) for x in coeffs], dtype=np.int64)
        return np.tensordot(c, self.unit_images, axes=1) % self.p

    def matrix_of_coords(self, coords):
        """Images for order coordinates; accepts shape (4,) or (n, 4)."""
        c = np.asarray(coords, dtype=np.int64) % self.p
        return np.tensordot(c, self.basis_images, axes=1) % self.p

    def __call__(self, x):
        return MatrixRep2(tuple(self.matrix_of_coeffs(x.coeffs).ravel()), "Fp", self.p)

    def unit_count(self):
        """Brute-force count of units of O (x) F_p."""
        p = self.p
        grid = np.array(list(itertools.product(range(p), repeat=4)), dtype=np.int64)
        m = self.matrix_of_coords(grid)
        d = (m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]) % p
        return int(np.count_nonzero(d))


def _anticommuting_pair(a, b, p):
    """I, J in M_2(F_p) with I^2 = a, J^2 = b, IJ = -JI (a nonzero)."""
    roots = [s for s in range(1, p) if s * s % p == a]
    if roots:
        s = roots[0]
        I = np.array([[s, 0], [0, (-s) % p]], dtype=np.int64)
        J = np.array([[0, b], [1, 0]], dtype=np.int64)
        return I, J
    I = np.array([[0, a], [1, 0]], dtype=np.int64)
    # J = [[x, -a y], [y, -x]] squares to (x^2 - a y^2); search the conic
    for x in range(p):
        for y in range(p):
            if (x * x - a * y * y - b) % p == 0:
                return I, np.array([[x, (-a * y) % p], [y, (-x) % p]], dtype=np.int64)
    raise DomainError("no point on the splitting conic")  # impossible for odd p


def _rank_mod_p(m, p):
    a = [[int(x) % p for x in row] for row in m]
    rank, cols = 0, len(a[0])
    for c in range(cols):
        piv = next((r for r in range(rank, len(a)) if a[r][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        a[rank] = [x * inv % p for x in a[rank]]
        for r in range(len(a)):
            if r != rank and a[r][c]:
                f = a[r][c]
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


@lru_cache(maxsize=64)
def split_mod_p(O, p):
    return SplitModP(O, p)


# ---------------------------------------------------------------------------
# Riemann form

def riemann_form(x, y, mu):
    """tr(mu x conj(y)); requires mu^2 to be a negative rational scalar."""
    m2 = mu * mu
    if not m2.is_scalar() or m2.coeffs[0] >= 0:
        raise DomainError("mu^2 must be a negative rational scalar")
    return (mu * x * y.conjugate()).reduced_trace()


def find_mu(O, max_height=40):
    """mu in O with mu^2 = -disc.

    mu has trace 0, so one coordinate is solved from the other three, which
    run over growing boxes; the lexicographically smallest solution in the
    first box containing one is returned.
    """
    target = discriminant(O.algebra)
    return _find_mu(O, target, max_height)


@lru_cache(maxsize=32)
def _find_mu(O, target, max_height):
    T = np.array(O.norm_gram(), dtype=np.int64)
    tr = np.array(O.traces(), dtype=np.int64)
    k = min((a for a in range(4) if tr[a]), key=lambda a: abs(tr[a]))
    free = [a for a in range(4) if a != k]
    for h in range(1, max_height + 1):
        r = np.arange(-h, h + 1)
        f = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        rest = f @ tr[free]
        f = f[rest % tr[k] == 0]
        c = np.zeros((len(f), 4), dtype=np.int64)
        c[:, free] = f
        c[:, k] = -(f @ tr[free]) // tr[k]
        ok = np.einsum("na,ab,nb->n", c, T, c) == 2 * target
        if ok.any():
            c = c[ok]
            return O.element(c[np.lexsort(c.T[::-1])[0]])
    return None
