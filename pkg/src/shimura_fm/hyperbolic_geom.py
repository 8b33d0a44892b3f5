"""Hyperbolic plane kernels, the conjugate-diagonal potentials, and curve volumes.

Everything geometric runs in the unit disk; upper half-plane input is
converted with the Cayley map z -> (z - i)/(z + i).  Distances and areas are
computed for curvature -1 and rescaled for other curvatures: a metric of
curvature -c has distances 1/sqrt(c) and areas 1/c times the base values.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConvergenceError, DomainError

MODELS = ("UHP", "Disk")


# ---------------------------------------------------------------------------
# normalization

@dataclass(frozen=True)
class Normalization:
    curvature: float = 1.0  # the metric has curvature -curvature

    def __post_init__(self):
        if self.curvature not in (1, 2, 4):
            raise ValueError("supported curvatures are -1, -2 and -4")

    @property
    def dist_scale(self):
        return 1 / math.sqrt(self.curvature)

    @property
    def area_scale(self):
        return 1 / self.curvature

    @property
    def tag(self):
        return f"curvature-{self.curvature:g}"

    @classmethod
    def from_tag(cls, tag):
        if isinstance(tag, Normalization):
            return tag
        if tag is None:
            return CURV1
        return cls(float(str(tag).replace("curvature-", "").lstrip("-")))


CURV1 = Normalization(1)
CURV2 = Normalization(2)
CURV4 = Normalization(4)


# ---------------------------------------------------------------------------
# points

def cayley(z):
    return (z - 1j) / (z + 1j)


def cayley_inv(w):
    return 1j * (1 + w) / (1 - w)


@dataclass(frozen=True)
class HPoint:
    value: complex
    model: str = "Disk"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        v = complex(self.value)
        object.__setattr__(self, "value", v)
        if self.model == "UHP" and not v.imag > 0:
            raise DomainError(f"{v} is not in the upper half-plane")
        if self.model == "Disk" and not abs(v) < 1:
            raise DomainError(f"{v} is not in the unit disk")

    def to_disk(self):
        return self if self.model == "Disk" else HPoint(cayley(self.value), "Disk")

    def to_uhp(self):
        return self if self.model == "UHP" else HPoint(cayley_inv(self.value), "UHP")

    def to(self, model):
        return self.to_disk() if model == "Disk" else self.to_uhp()


@dataclass(frozen=True)
class ProductPoint:
    first: HPoint
    second: HPoint
    second_conjugated: bool = False

    def __post_init__(self):
        if self.first.model != self.second.model:
            raise DomainError("product point coordinates must use the same model")

    @classmethod
    def disk(cls, z, w, second_conjugated=False):
        return cls(HPoint(z), HPoint(w), second_conjugated)

    @property
    def zw(self):
        return self.first.to_disk().value, self.second.to_disk().value


@dataclass(frozen=True)
class HermitianForm2:
    matrix: np.ndarray
    at: ProductPoint | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("expected a 2x2 matrix")
        object.__setattr__(self, "matrix", m)

    def hermitian_defect(self):
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def eigenvalues(self):
        m = (self.matrix + self.matrix.conj().T) / 2
        return np.linalg.eigvalsh(m)

    def __sub__(self, other):
        return HermitianForm2(self.matrix - np.asarray(getattr(other, "matrix", other)), self.at)


# ---------------------------------------------------------------------------
# isometries and distance

def moebius(M, z):
    """(az + b)/(cz + d) on arrays; no domain checks."""
    (a, b), (c, d) = np.asarray(M)
    return (a * z + b) / (c * z + d)


def moebius_act(M, z):
    """Act by a real matrix of positive determinant; the model of z is kept."""
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.abs(M.imag).max() > 0:
        raise DomainError("moebius_act expects a real matrix; use su11_act in the disk")
    M = M.real.astype(float)
    if np.linalg.det(M) <= 0:
        raise DomainError("determinant must be positive (orientation-preserving)")
    u = z.to_uhp().value
    return HPoint(complex(moebius(M, u)), "UHP").to(z.model)


def real_to_disk_matrix(M):
    """Conjugate a real matrix acting on H by the Cayley map."""
    C = np.array([[1, -1j], [1, 1j]])
    return C @ np.asarray(M, dtype=complex) @ np.linalg.inv(C)


def su11_act(M, z):
    return HPoint(complex(moebius(M, z.to_disk().value)), "Disk").to(z.model)


def disk_dist(z, w):
    """Curvature -1 distance in the disk, vectorized."""
    q = np.abs((z - w) / (1 - z * np.conj(w)))
    return 2 * np.arctanh(np.minimum(q, 1 - 1e-16))


def uhp_dist(z, w):
    return np.arccosh(1 + np.abs(z - w) ** 2 / (2 * np.imag(z) * np.imag(w)))


def dist(z, w, normalization=CURV1):
    if z.model != w.model:
        raise DomainError("points are in different models")
    s = Normalization.from_tag(normalization).dist_scale
    if z.model == "UHP":
        return float(uhp_dist(z.value, w.value)) * s
    return float(disk_dist(z.value, w.value)) * s


def disk_area_density(z):
    """Curvature -1 area density 4/(1-|z|^2)^2 with respect to dx dy."""
    return 4.0 / (1 - np.abs(z) ** 2) ** 2


def disk_ball_area(rho, normalization=CURV1):
    """Area of a metric ball of radius rho under the given curvature."""
    n = Normalization.from_tag(normalization)
    rho1 = rho / n.dist_scale
    return 4 * math.pi * math.sinh(rho1 / 2) ** 2 * n.area_scale


# ---------------------------------------------------------------------------
# potentials

def psi_zw(z, w):
    """|conj(w) - z|^2 / |1 - z w|^2 on arrays."""
    den = np.abs(1 - z * w)
    if np.any(den < 1e-14):
        raise DomainError("|1 - zw| is numerically zero")
    return np.abs(np.conj(w) - z) ** 2 / den ** 2


def psi(z, w):
    z, w = z.to_disk().value, w.to_disk().value
    return float(psi_zw(z, w))


def potential_S_zw(z, w):
    return -np.log1p(-psi_zw(z, w))


def potential_S(z, w):
    return float(potential_S_zw(z.to_disk().value, w.to_disk().value))


class PotentialF:
    """The three-band potential F = f(psi) attached to radii r < R.

    Inner band psi <= tanh^2(r/2): the constant c.  Middle band: h(s) with
    h(c) = c and h' = (1 - sqrt((e^c-1)/(e^s-1)))/K, integrated numerically.
    Outer band: h(C) + (s - C), so F - S is constant there.
    """

    def __init__(self, r, R, panels=8, nodes=12):
        if not 0 < r < R:
            raise DomainError("need 0 < r < R")
        self.r, self.R = float(r), float(R)
        self.psi_in = math.tanh(r / 2) ** 2
        self.psi_out = math.tanh(R / 2) ** 2
        self.c = -math.log1p(-self.psi_in)
        self.C = -math.log1p(-self.psi_out)
        self.K = 1 - math.sqrt(math.expm1(self.c) / math.expm1(self.C))
        self._x, self._w = leggauss(nodes)
        self.panels = panels
        self.h_C = float(self.h(self.C))

    @property
    def seams(self):
        return (self.psi_in, self.psi_out)

    @property
    def plateau(self):
        return self.c

    def h_prime(self, s):
        s = np.asarray(s, dtype=float)
        return (1 - np.sqrt(math.expm1(self.c) / np.expm1(s))) / self.K

    def h(self, s):
        """c + integral_c^s h' by composite Gauss-Legendre quadrature."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        edges = self.c + (s[:, None] - self.c) * np.linspace(0, 1, self.panels + 1)[None, :]
        a, b = edges[:, :-1], edges[:, 1:]
        mid, half = (a + b) / 2, (b - a) / 2
        pts = mid[..., None] + half[..., None] * self._x
        vals = self.h_prime(pts) @ self._w
        out = self.c + (vals * half).sum(axis=1)
        return out if out.size > 1 else out[0]

    def of_s(self, s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape, self.c)
        mid = (s > self.c) & (s < self.C)
        if mid.any():
            out[mid] = self.h(s[mid])
        hi = s >= self.C
        out[hi] = self.h_C + (s[hi] - self.C)
        return out

    def of_psi(self, p):
        return self.of_s(-np.log1p(-np.asarray(p, dtype=float)))

    def __call__(self, z, w):
        return self.of_psi(psi_zw(z, w))


def potential_F(z, w, r, R):
    F = PotentialF(r, R)
    return float(F(np.asarray(z.to_disk().value), np.asarray(w.to_disk().value)))


# ---------------------------------------------------------------------------
# complex Hessian

def _second_derivs(f, x0, h):
    """Real Hessian of f: R^4 -> R by central differences."""
    n = len(x0)
    E = np.eye(n) * h
    H = np.empty((n, n))
    f0 = f(x0)
    for a in range(n):
        H[a, a] = (f(x0 + E[a]) - 2 * f0 + f(x0 - E[a])) / h ** 2
        for b in range(a + 1, n):
            H[a, b] = H[b, a] = (f(x0 + E[a] + E[b]) - f(x0 + E[a] - E[b])
                                 - f(x0 - E[a] + E[b]) + f(x0 - E[a] - E[b])) / (4 * h * h)
    return H


def complex_hessian(potential, at, step=1e-3):
    """Matrix of d^2/dzeta_a dzeta-bar_b at a point of D x D.

    ``potential(z, w)`` works on complex scalars or arrays.  Second
    differences at step and step/2 are combined by Richardson extrapolation.
    Potentials exposing ``seams`` (values of psi) are refused within
    10*step of a seam.
    """
    z0, w0 = at.zw
    seams = getattr(potential, "seams", ())
    if seams:
        p0 = float(psi_zw(np.asarray(z0), np.asarray(w0)))
        if any(abs(p0 - s) < 10 * step for s in seams):
            raise DomainError("point is too close to a seam of the potential")

    def f(x):
        return float(potential(np.asarray(complex(x[0], x[1])), np.asarray(complex(x[2], x[3]))))

    x0 = np.array([z0.real, z0.imag, w0.real, w0.imag])
    H1 = _second_derivs(f, x0, step)
    H2 = _second_derivs(f, x0, step / 2)
    H = (4 * H2 - H1) / 3
    out = np.empty((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
            out[a, b] = (H[xa, xb] + H[ya, yb]) / 4 + 1j * (H[xa, yb] - H[ya, xb]) / 4
    return HermitianForm2(out, at)


def omega_std(at, normalization=CURV1):
    """Product Kaehler form in the i ddbar convention: twice the Hessian of S."""
    z, w = at.zw
    n = Normalization.from_tag(normalization)
    m = np.diag([2 / (1 - abs(z) ** 2) ** 2, 2 / (1 - abs(w) ** 2) ** 2]).astype(complex)
    return HermitianForm2(m * n.area_scale, at)


# ---------------------------------------------------------------------------
# Lelong numbers

@dataclass
class LelongEstimate:
    value: float
    ladder: list
    ratios: list
    convergence: float
    singular: bool = True


def _directions(n_dirs, dim):
    rng = np.random.default_rng(12345)
    u = rng.normal(size=(n_dirs, dim)) + 1j * rng.normal(size=(n_dirs, dim))
    basis = np.eye(dim, dtype=complex)
    u = np.vstack([basis, u])
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def lelong_estimate(potential, at, n_dirs=64, exponents=(3, 4, 5, 6, 7, 8)):
    """Estimate liminf phi(y)/log|y - x| at x.

    ``potential`` takes an (n, dim) complex array of points and returns
    n real values.  For each epsilon on a geometric ladder, the minimum over
    directions of phi(x + eps u)/log eps is taken; the ratios are then
    extrapolated linearly in 1/log eps to 1/log eps = 0.
    """
    x = np.atleast_1d(np.asarray(at.zw if isinstance(at, ProductPoint) else at, dtype=complex))
    U = _directions(n_dirs, len(x))
    eps = [10.0 ** (-k) for k in exponents]
    ratios = []
    for e in eps:
        vals = np.asarray(potential(x[None, :] + e * U), dtype=float)
        vals = vals[np.isfinite(vals)]
        ratios.append(float(np.min(vals / math.log(e))) if vals.size else math.inf)
    t = np.array([1 / math.log(e) for e in eps])
    y = np.array(ratios)
    A = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(A[-3:], y[-3:], rcond=None)
    value = float(coef[0])
    conv = abs(value - ratios[-1])
    if abs(value) < 1e-3:
        return LelongEstimate(0.0, eps, ratios, conv, singular=False)
    return LelongEstimate(value, eps, ratios, conv)


# ---------------------------------------------------------------------------
# curves

PARAMS = ("id", "tanh_half")


def _complex_matrix(m):
    return np.array([[complex(*e) if isinstance(e, (list, tuple)) else complex(e) for e in row]
                     for row in m])


def _matrix_json(M):
    return [[[float(e.real), float(e.imag)] for e in row] for row in np.asarray(M, dtype=complex)]


@dataclass(frozen=True)
class Coordinate:
    """One coordinate of a chart: a disk Moebius map of the parameter or a constant."""
    kind: str
    matrix: tuple = None
    value: complex = 0j

    @classmethod
    def mobius(cls, M):
        return cls("mobius", tuple(map(tuple, np.asarray(M, dtype=complex))))

    @classmethod
    def const(cls, v):
        return cls("const", None, complex(v))

    def eval(self, x, dx):
        """Value and derivative given the parameter value x and dx/dt."""
        if self.kind == "const":
            return np.full(x.shape, self.value), np.zeros(x.shape, dtype=complex)
        (a, b), (c, d) = self.matrix
        den = c * x + d
        return (a * x + b) / den, (a * d - b * c) / den ** 2 * dx

    def to_json(self):
        if self.kind == "const":
            return {"kind": "const", "value": [self.value.real, self.value.imag]}
        return {"kind": "mobius", "matrix": _matrix_json(self.matrix)}

    @classmethod
    def from_json(cls, d):
        if d["kind"] == "const":
            return cls.const(complex(*d["value"]))
        if d["kind"] == "mobius":
            return cls.mobius(_complex_matrix(d["matrix"]))
        raise ValueError(f"unknown coordinate kind {d['kind']!r}")


@dataclass(frozen=True)
class Chart:
    first: Coordinate
    second: Coordinate
    domain: tuple  # (u0, u1, v0, v1) for t = u + i v
    param: str = "id"

    def __post_init__(self):
        if self.param not in PARAMS:
            raise ValueError(f"param must be one of {PARAMS}")
        u0, u1, v0, v1 = self.domain
        if not (u1 > u0 and v1 > v0):
            raise ValueError("empty chart domain")

    def sample(self, n):
        """Midpoints of an n x n grid with the pulled-back area density."""
        u0, u1, v0, v1 = self.domain
        du, dv = (u1 - u0) / n, (v1 - v0) / n
        u = u0 + du * (np.arange(n) + 0.5)
        v = v0 + dv * (np.arange(n) + 0.5)
        t = u[:, None] + 1j * v[None, :]
        if self.param == "id":
            x, dx = t, np.ones_like(t)
        else:
            x = np.tanh(t / 2)
            dx = (1 - x * x) / 2
        z, dz = self.first.eval(x, dx)
        w, dw = self.second.eval(x, dx)
        ok = (np.abs(z) < 1) & (np.abs(w) < 1)
        zs, ws = np.where(ok, z, 0), np.where(ok, w, 0)
        dens = np.where(ok, disk_area_density(zs) * np.abs(dz) ** 2
                        + disk_area_density(ws) * np.abs(dw) ** 2, 0.0)
        return zs, ws, dens * du * dv, ok

    def to_json(self):
        return {"first": self.first.to_json(), "second": self.second.to_json(),
                "domain": list(self.domain), "param": self.param}

    @classmethod
    def from_json(cls, d):
        return cls(Coordinate.from_json(d["first"]), Coordinate.from_json(d["second"]),
                   tuple(d["domain"]), d.get("param", "id"))


@dataclass(frozen=True)
class ParamCurve:
    """A holomorphic curve in D x D given by analytic charts.

    ``tag`` names the analytic form; ``mult`` and ``intersections`` are
    declared rather than computed.
    """
    tag: str
    charts: tuple
    mesh: float = 0.02
    mult: int = 1
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def to_json(self):
        return {"tag": self.tag, "charts": [c.to_json() for c in self.charts],
                "mesh": self.mesh, "mult": self.mult, "meta": self.meta}

    @classmethod
    def from_json(cls, d):
        if isinstance(d, str):
            d = json.loads(d)
        return cls(d["tag"], tuple(Chart.from_json(c) for c in d["charts"]),
                   d.get("mesh", 0.02), d.get("mult", 1), d.get("meta", {}))

    def points(self, n=64):
        out = [c.sample(n)[:2] for c in self.charts]
        return np.concatenate([z.ravel() for z, _ in out]), np.concatenate([w.ravel() for _, w in out])


@dataclass
class VolumeResult:
    value: float
    refinement_delta: float
    mesh: float
    normalization: str

    def to_json(self):
        return {"value": self.value, "refinement_delta": self.refinement_delta,
                "mesh": self.mesh, "normalization": self.normalization}


def coverage(margin, ok):
    """Fraction of each grid cell inside {margin > 0}, linear in the margin.

    Exact for boundaries aligned with the grid; hard indicators (booleans)
    are used as given.
    """
    if margin.dtype == bool:
        return (margin & ok).astype(float)
    m = np.where(ok, margin, np.min(margin[ok]) if ok.any() else -1.0)
    gu, gv = np.gradient(m) if min(m.shape) > 1 else (np.zeros_like(m), np.zeros_like(m))
    scale = np.abs(gu) + np.abs(gv)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(scale > 0, 0.5 + m / np.where(scale > 0, scale, 1), (m > 0).astype(float))
    return np.clip(frac, 0, 1) * ok


def curve_volume_at(curve, region, n):
    """One midpoint-rule evaluation with an n x n grid per chart (curvature -1)."""
    total = 0.0
    for chart in curve.charts:
        z, w, dA, ok = chart.sample(n)
        total += float(np.sum(dA * coverage(np.asarray(region(z, w)), ok)))
    return total


def curve_volume(curve, region, mesh=None, rtol=2e-3, atol=1e-8, max_refine=5,
                 normalization=CURV1):
    """Volume of the part of the curve inside ``region`` by dyadic refinement.

    ``region(z, w)`` returns a signed margin (positive inside) or a boolean
    mask on disk coordinates.
    The grid starts at spacing ``mesh`` in the chart parameter and halves until
    two successive values agree within rtol (relative) or atol.
    """
    n_scale = Normalization.from_tag(normalization)
    mesh = mesh or curve.mesh
    span = max(max(c.domain[1] - c.domain[0], c.domain[3] - c.domain[2]) for c in curve.charts)
    n = max(8, int(math.ceil(span / mesh)))
    prev = curve_volume_at(curve, region, n)
    for _ in range(max_refine):
        n *= 2
        cur = curve_volume_at(curve, region, n)
        delta = abs(cur - prev)
        if delta <= max(atol, rtol * abs(cur)):
            return VolumeResult(cur * n_scale.area_scale, delta * n_scale.area_scale,
                                span / n, n_scale.tag)
        prev = cur
    raise ConvergenceError("curve volume did not converge",
                           {"last": cur, "delta": delta, "n": n, "tag": curve.tag})


# regions ------------------------------------------------------------------

def product_ball(center, r, normalization=CURV1):
    """Metric ball of the product metric: d(z,z0)^2 + d(w,w0)^2 < r^2."""
    z0, w0 = center.zw
    s = Normalization.from_tag(normalization).dist_scale
    return lambda z, w: r - np.sqrt(disk_dist(z, z0) ** 2 + disk_dist(w, w0) ** 2) * s


def diagonal_tube(r, normalization=CURV1):
    s = Normalization.from_tag(normalization).dist_scale
    return lambda z, w: r - disk_dist(z, w) * s


def conjugate_tube(r, normalization=CURV1):
    """Points with d(z, conj w) < r, i.e. psi < tanh^2 of the curvature -1 radius."""
    s = Normalization.from_tag(normalization).dist_scale
    return lambda z, w: r - disk_dist(z, np.conj(w)) * s


def hecke_tube(r, matrices, normalization=CURV1):
    """Union over disk matrices g of {d(g z, w) < r}."""
    s = Normalization.from_tag(normalization).dist_scale

    def region(z, w):
        best = np.full(np.shape(z), -np.inf)
        for g in matrices:
            best = np.maximum(best, r - disk_dist(moebius(g, z), w) * s)
        return best
    return region


# standard curves ---------------------------------------------------------------

IDENTITY = np.eye(2, dtype=complex)


def translation_matrix(ell):
    """Disk matrix of the hyperbolic translation of length ell along the real diameter."""
    ch, sh = math.cosh(ell / 2), math.sinh(ell / 2)
    return np.array([[ch, sh], [sh, ch]], dtype=complex)


def rotation_matrix(theta):
    return np.array([[np.exp(1j * theta / 2), 0], [0, np.exp(-1j * theta / 2)]])


def graph_curve(tag, M, radius=0.95, mesh=0.02, meta=None):
    """{(z, M z)} over the square |Re z|, |Im z| <= radius."""
    ch = Chart(Coordinate.mobius(IDENTITY), Coordinate.mobius(M), (-radius, radius, -radius, radius))
    return ParamCurve(tag, (ch,), mesh, 1, meta or {})


def strip_curve(tag, M, length=2.0, mesh=0.02, meta=None):
    """{(x, M x)} with x = tanh(t/2), t in a window of the strip |Im t| < pi/2."""
    v = math.pi / 2 - 1e-9
    ch = Chart(Coordinate.mobius(IDENTITY), Coordinate.mobius(M), (-length, length, -v, v), "tanh_half")
    return ParamCurve(tag, (ch,), mesh, 1, meta or {})


def fiber_curve(z0=0j, radius=0.95, mesh=0.02):
    ch = Chart(Coordinate.const(z0), Coordinate.mobius(IDENTITY), (-radius, radius, -radius, radius))
    return ParamCurve("fiber", (ch,), mesh, 1, {"base": [z0.real, z0.imag]})


def graph_neg_z(radius=0.95, mesh=0.02):
    return graph_curve("graph_neg_z", np.array([[-1, 0], [0, 1]], dtype=complex), radius, mesh)


def graph_conj(length=2.0, mesh=0.02):
    """Graph of complex conjugation, i.e. {(z, z)} read in the conjugate second factor."""
    return strip_curve("graph_conj", IDENTITY, length, mesh)


def hecke_translate(ell, m=None, length=2.0, mesh=0.02):
    return strip_curve(f"hecke_translate({m})" if m else "hecke_translate", translation_matrix(ell),
                       length, mesh, {"ell": ell, "m": m})
