"""Small exact linear-algebra kernels over Z and Q."""
from fractions import Fraction
from math import gcd, lcm
from functools import reduce

from sympy import factorint, isprime


def to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted where exact rationals are required")
    return Fraction(x)


def fraction_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def common_denominator(values):
    return reduce(lcm, (Fraction(v).denominator for v in values), 1)


def prime_factors(n):
    n = abs(int(n))
    if n <= 1:
        return []
    return sorted(factorint(n))


def is_prime(n):
    return isprime(int(n))


def primes_between(lo, hi):
    return [q for q in range(max(lo, 2), hi + 1) if isprime(q)]


def det(m):
    """Exact determinant by fraction-valued Gaussian elimination."""
    a = [[Fraction(v) for v in row] for row in m]
    n = len(a)
    result = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            result = -result
        result *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return result


def rref(m):
    a = [[Fraction(v) for v in row] for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((k for k in range(r, rows) if a[k][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for k in range(rows):
            if k != r and a[k][c] != 0:
                f = a[k][c]
                a[k] = [x - f * y for x, y in zip(a[k], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def nullspace(m, ncols=None):
    """Basis of {x : m x = 0} over Q, one vector per free column."""
    if not m:
        n = ncols
        return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    a, pivots = rref(m)
    n = len(m[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in zip(a, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def solve(m, b):
    """Unique solution of the square system m x = b."""
    n = len(m)
    aug = [list(map(Fraction, row)) + [Fraction(bv)] for row, bv in zip(m, b)]
    a, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ValueError("singular system")
    return [a[i][n] for i in range(n)]


def primitive_integer_vector(v):
    """Scale a rational vector to a primitive integer vector (sign kept)."""
    d = common_denominator(v)
    ints = [int(Fraction(x) * d) for x in v]
    g = reduce(gcd, ints, 0)
    if g == 0:
        raise ValueError("zero vector")
    return [x // g for x in ints]


def hnf_rows(rows):
    """Upper-triangular Hermite normal form of the integer row lattice."""
    remaining = [list(map(int, r)) for r in rows if any(r)]
    if not remaining:
        return []
    n = len(remaining[0])
    out = []
    for col in range(n):
        while True:
            nz = [r for r in remaining if r[col] != 0]
            if len(nz) <= 1:
                break
            piv = min(nz, key=lambda r: abs(r[col]))
            for r in nz:
                if r is not piv:
                    q = r[col] // piv[col]
                    for k in range(n):
                        r[k] -= q * piv[k]
            remaining = [r for r in remaining if any(r)]
        nz = [r for r in remaining if r[col] != 0]
        if not nz:
            continue
        piv = nz[0]
        remaining = [r for r in remaining if r is not piv]
        if piv[col] < 0:
            piv = [-x for x in piv]
        for prev in out:
            q = prev[col] // piv[col]
            if q:
                for k in range(n):
                    prev[k] -= q * piv[k]
        out.append(piv)
    return out


def rational_hnf(rows):
    """HNF of the Z-lattice spanned by rational row vectors."""
    flat = [x for r in rows for x in r]
    d = common_denominator(flat)
    ints = [[int(Fraction(x) * d) for x in r] for r in rows]
    return [[Fraction(x, d) for x in r] for r in hnf_rows(ints)]


def inv_mod(a, p):
    return pow(int(a) % p, -1, p)


def frac_mod(x, p):
    x = Fraction(x)
    if x.denominator % p == 0:
        raise ValueError(f"denominator of {x} not invertible mod {p}")
    return (x.numerator * inv_mod(x.denominator, p)) % p
