"""Dyadic geometry: cubes, annuli, exact 1-d overlaps and sparse coefficient fields.

Everything that touches interval endpoints in dimension one is done in exact
dyadic-rational arithmetic (integer mantissa times a power of two), so annulus
boundaries 2^k and cube boundaries m*2^-v never suffer cancellation.  Overlap
measures in dimensions two and three are stratified Monte Carlo estimates with
a reported standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "Dyadic",
    "ZERO",
    "DyadicCube",
    "Annulus",
    "CoefficientField",
    "PiecewiseConstantFunction",
    "Partition1D",
    "AnnulusPartition",
    "OverlapEstimate",
    "cube_extent",
    "annulus_cube_overlap",
    "refine_to_partition",
    "refinement_segments",
    "level_function",
    "annulus_of",
    "dimension_constant",
]


class Dyadic:
    """Exact dyadic rational ``num * 2**exp`` with integer ``num`` and ``exp``.

    Normalised so ``num`` is odd (or zero with ``exp == 0``).  Supports exact
    comparison, addition, subtraction and multiplication; conversion to float
    is the single lossy step and is exact whenever ``num`` fits in 53 bits.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if num == 0:
            exp = 0
        else:
            while num % 2 == 0:
                num //= 2
                exp += 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):  # immutable
        raise AttributeError("Dyadic is immutable")

    @staticmethod
    def pow2(k: int) -> "Dyadic":
        return Dyadic(1, k)

    @staticmethod
    def from_float(x: float) -> "Dyadic":
        """Exact conversion: every finite float is a dyadic rational."""
        if x != x or x in (math.inf, -math.inf):
            raise ValueError("not a finite float: %r" % (x,))
        m, e = math.frexp(x)
        num = int(m * (1 << 53))
        return Dyadic(num, e - 53)

    @staticmethod
    def coerce(x: Union["Dyadic", int, float]) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return Dyadic(x, 0)
        return Dyadic.from_float(float(x))

    def _aligned(self, other: "Dyadic") -> Tuple[int, int, int]:
        e = min(self.exp, other.exp)
        return self.num << (self.exp - e), other.num << (other.exp - e), e

    def __add__(self, other) -> "Dyadic":
        other = Dyadic.coerce(other)
        a, b, e = self._aligned(other)
        return Dyadic(a + b, e)

    def __sub__(self, other) -> "Dyadic":
        other = Dyadic.coerce(other)
        a, b, e = self._aligned(other)
        return Dyadic(a - b, e)

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.num, self.exp)

    def __abs__(self) -> "Dyadic":
        return Dyadic(abs(self.num), self.exp)

    def __mul__(self, other) -> "Dyadic":
        other = Dyadic.coerce(other)
        return Dyadic(self.num * other.num, self.exp + other.exp)

    def half(self) -> "Dyadic":
        return Dyadic(self.num, self.exp - 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Dyadic, int, float)):
            return NotImplemented
        other = Dyadic.coerce(other)
        return self.num == other.num and self.exp == other.exp

    def __lt__(self, other) -> bool:
        other = Dyadic.coerce(other)
        a, b, _ = self._aligned(other)
        return a < b

    def __le__(self, other) -> bool:
        other = Dyadic.coerce(other)
        a, b, _ = self._aligned(other)
        return a <= b

    def __gt__(self, other) -> bool:
        return Dyadic.coerce(other) < self

    def __ge__(self, other) -> bool:
        return Dyadic.coerce(other) <= self

    def __hash__(self):
        return hash((self.num, self.exp))

    def __float__(self) -> float:
        return math.ldexp(self.num, self.exp)

    def __repr__(self):
        return "Dyadic(%d, %d)" % (self.num, self.exp)


ZERO = Dyadic(0)


def annulus_of(x: Dyadic) -> int:
    """Index k of the annulus C_k = {2^(k-1) <= |x| < 2^k} containing x > 0.

    For normalised ``num * 2**exp`` with odd num > 0 this is exp + bitlength(num):
    boundary points 2^j land in the higher annulus C_{j+1}, matching the
    half-open convention.
    """
    if x.num <= 0:
        raise ValueError("annulus_of needs a positive dyadic")
    return x.exp + x.num.bit_length()


def dimension_constant(n: int) -> int:
    """Diagnostic constant 1 + floor(log2(2*sqrt(n) + 1)); no operation depends on it."""
    return 1 + int(math.floor(math.log2(2.0 * math.sqrt(n) + 1.0)))


@dataclass(frozen=True)
class DyadicCube:
    """Half-open cube Q_{v,m} = prod_i [m_i 2^-v, (m_i+1) 2^-v) at level v >= 0."""

    v: int
    m: Union[int, Tuple[int, ...]]

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("cube level must be nonnegative, got %d" % self.v)

    def index_tuple(self, n: int) -> Tuple[int, ...]:
        m = self.m
        if isinstance(m, int):
            if n != 1:
                raise ValueError("scalar index only valid for n=1")
            return (m,)
        if len(m) != n:
            raise ValueError("index dimension %d != n=%d" % (len(m), n))
        return tuple(m)


def cube_extent(cube: DyadicCube, n: int) -> Tuple[Tuple[Dyadic, Dyadic], ...]:
    """Axis-aligned extent of Q_{v,m}: per axis the half-open [m 2^-v, (m+1) 2^-v)."""
    idx = cube.index_tuple(n)
    e = -cube.v
    return tuple((Dyadic(mi, e), Dyadic(mi + 1, e)) for mi in idx)


@dataclass(frozen=True)
class Annulus:
    """Annulus C_k = {x : 2^(k-1) <= |x| < 2^k}."""

    k: int

    def intervals(self) -> Tuple[Tuple[Dyadic, Dyadic], Tuple[Dyadic, Dyadic]]:
        """The two 1-d components, [-2^k, -2^(k-1)) and [2^(k-1), 2^k)."""
        lo, hi = Dyadic.pow2(self.k - 1), Dyadic.pow2(self.k)
        return ((-hi, -lo), (lo, hi))

    def volume(self, n: int) -> float:
        """Lebesgue measure in dimension n."""
        ball = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[n]
        return ball * (2.0 ** (self.k * n)) * (1.0 - 2.0 ** (-n))


def _as_key(n: int, m) -> Union[int, Tuple[int, ...]]:
    if n == 1:
        if isinstance(m, int):
            return m
        if len(m) == 1:
            return int(m[0])
        raise ValueError("n=1 index must be a single integer")
    t = tuple(int(c) for c in m)
    if len(t) != n:
        raise ValueError("index dimension %d != n=%d" % (len(t), n))
    return t


class CoefficientField:
    """Sparse map (v, m) -> complex coefficient; absent entries are zero.

    Immutable after construction.  ``vmax`` is the largest occupied level.
    """

    __slots__ = ("n", "entries", "vmax")

    def __init__(self, n: int, entries: Dict):
        if n not in (1, 2, 3):
            raise ValueError("supported dimensions are 1, 2, 3")
        clean = {}
        vmax = 0
        for (v, m), val in entries.items():
            v = int(v)
            if v < 0:
                raise ValueError("negative level %d" % v)
            c = complex(val)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError("non-finite coefficient at (%r, %r)" % (v, m))
            if c == 0:
                continue
            clean[(v, _as_key(n, m))] = c
            vmax = max(vmax, v)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "entries", clean)
        object.__setattr__(self, "vmax", vmax)

    def __setattr__(self, name, value):
        raise AttributeError("CoefficientField is immutable")

    def __len__(self):
        return len(self.entries)

    def levels(self) -> List[int]:
        return sorted({v for v, _ in self.entries})

    def level_items(self, v: int) -> List[Tuple[Union[int, Tuple[int, ...]], complex]]:
        return sorted(
            ((m, c) for (vv, m), c in self.entries.items() if vv == v),
            key=lambda t: t[0],
        )

    def scaled(self, factor: complex) -> "CoefficientField":
        return CoefficientField(self.n, {k: factor * c for k, c in self.entries.items()})

    def truncated(self, vmax: int) -> "CoefficientField":
        return CoefficientField(self.n, {k: c for k, c in self.entries.items() if k[0] <= vmax})

    @property
    def dimension_constant(self) -> int:
        return dimension_constant(self.n)


class PiecewiseConstantFunction:
    """Finite piecewise-constant function on the line with exact dyadic breakpoints.

    ``values[i]`` holds on [breakpoints[i], breakpoints[i+1]); the function is
    zero outside [breakpoints[0], breakpoints[-1]).
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Sequence, values: Sequence[complex]):
        bps = tuple(Dyadic.coerce(b) for b in breakpoints)
        vals = tuple(complex(v) for v in values)
        if len(bps) != len(vals) + 1 and not (len(bps) == 0 and len(vals) == 0):
            raise ValueError("need one more breakpoint than values")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        for v in vals:
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("non-finite segment value")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseConstantFunction is immutable")

    @staticmethod
    def from_segments(segments: Iterable[Tuple]) -> "PiecewiseConstantFunction":
        """Build from (lo, hi, value) triples; gaps are filled with zeros."""
        segs = sorted(
            ((Dyadic.coerce(lo), Dyadic.coerce(hi), complex(val)) for lo, hi, val in segments),
            key=lambda t: (float(t[0]), float(t[1])),
        )
        bps: List[Dyadic] = []
        vals: List[complex] = []
        for lo, hi, val in segs:
            if not lo < hi:
                raise ValueError("empty segment")
            if bps and lo < bps[-1]:
                raise ValueError("overlapping segments")
            if not bps:
                bps.append(lo)
            elif lo > bps[-1]:
                vals.append(0j)
                bps.append(lo)
            bps.append(hi)
            vals.append(val)
        return PiecewiseConstantFunction(bps, vals)

    @staticmethod
    def indicator(lo, hi) -> "PiecewiseConstantFunction":
        return PiecewiseConstantFunction([lo, hi], [1.0])

    @staticmethod
    def annulus_indicator(k: int) -> "PiecewiseConstantFunction":
        (nlo, nhi), (plo, phi) = Annulus(k).intervals()
        return PiecewiseConstantFunction.from_segments([(nlo, nhi, 1.0), (plo, phi, 1.0)])

    def segments(self) -> Iterator[Tuple[Dyadic, Dyadic, complex]]:
        for i, v in enumerate(self.values):
            yield self.breakpoints[i], self.breakpoints[i + 1], v

    def scaled(self, factor: complex) -> "PiecewiseConstantFunction":
        return PiecewiseConstantFunction(self.breakpoints, [factor * v for v in self.values])

    def __rmul__(self, factor):
        return self.scaled(factor)

    def lp_norm(self, p: float) -> float:
        """Plain Lebesgue p-quasi-norm, computed directly from segment lengths."""
        if not self.values:
            return 0.0
        if p == math.inf:
            return max((abs(v) for v in self.values), default=0.0)
        s = 0.0
        for lo, hi, v in self.segments():
            if v != 0:
                s += abs(v) ** p * float(hi - lo)
        return s ** (1.0 / p)


class Partition1D:
    """Consecutive half-open segments with exact dyadic breakpoints.

    ``values`` may hold scalars or per-level stacks (dict level -> coefficient),
    depending on the producer.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Sequence, values: Sequence):
        bps = tuple(Dyadic.coerce(b) for b in breakpoints)
        vals = tuple(values)
        if bps and len(bps) != len(vals) + 1:
            raise ValueError("need one more breakpoint than values")
        if not bps and vals:
            raise ValueError("values without breakpoints")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("Partition1D is immutable")

    def segments(self) -> Iterator[Tuple[Dyadic, Dyadic, object]]:
        for i, v in enumerate(self.values):
            yield self.breakpoints[i], self.breakpoints[i + 1], v

    def total_length(self) -> float:
        if not self.breakpoints:
            return 0.0
        return float(self.breakpoints[-1] - self.breakpoints[0])


@dataclass(frozen=True)
class AnnulusPartition:
    """Per-sign refinement of one annulus: stacks on [-2^k, -2^(k-1)) and [2^(k-1), 2^k)."""

    k: int
    negative: Partition1D
    positive: Partition1D


@dataclass(frozen=True)
class OverlapEstimate:
    measure: float
    standard_error: float

    @property
    def exact(self) -> bool:
        return self.standard_error == 0.0


def _interval_overlap(alo: Dyadic, ahi: Dyadic, blo: Dyadic, bhi: Dyadic) -> Dyadic:
    lo = alo if blo < alo else blo
    hi = ahi if ahi < bhi else bhi
    return hi - lo if lo < hi else ZERO


def _box_radius_bounds(extent) -> Tuple[float, float]:
    """Exact min/max Euclidean norm over an axis-aligned box (as floats)."""
    lo2 = 0.0
    hi2 = 0.0
    for a, b in extent:
        fa, fb = float(a), float(b)
        if fa <= 0.0 <= fb:
            d = 0.0
        else:
            d = min(abs(fa), abs(fb))
        lo2 += d * d
        hi2 += max(abs(fa), abs(fb)) ** 2
    return math.sqrt(lo2), math.sqrt(hi2)


def annulus_cube_overlap(
    k: int,
    cube: DyadicCube,
    n: int,
    samples: int = 4096,
    seed: int = 0xD7AD1C,
) -> OverlapEstimate:
    """Measure of Q_{v,m} intersected with C_k.

    n=1 is exact interval arithmetic with error bound zero.  n in {2, 3} is a
    stratified Monte Carlo estimate (4 strata per axis); strata entirely inside
    or outside the annulus contribute exactly.
    """
    if n == 1:
        ((lo, hi),) = cube_extent(cube, 1)
        total = ZERO
        for a, b in Annulus(k).intervals():
            total = total + _interval_overlap(lo, hi, a, b)
        return OverlapEstimate(float(total), 0.0)
    if n not in (2, 3):
        raise ValueError("unsupported dimension %d" % n)

    extent = cube_extent(cube, n)
    los = np.array([float(a) for a, _ in extent])
    side = 2.0 ** (-cube.v)
    r_lo, r_hi = 2.0 ** (k - 1), 2.0 ** k

    strata_per_axis = 4
    cells = strata_per_axis ** n
    per_cell = max(2, samples // cells)
    sub = side / strata_per_axis
    sub_vol = sub ** n

    rng = np.random.default_rng(np.random.SeedSequence((seed, k, cube.v, hash(cube.m) & 0xFFFF)))
    grids = np.stack(
        np.meshgrid(*([np.arange(strata_per_axis)] * n), indexing="ij"), axis=-1
    ).reshape(-1, n)

    measure = 0.0
    variance = 0.0
    for cell in grids:
        clo = los + cell * sub
        bmin, bmax = _box_radius_bounds([(Dyadic.from_float(c), Dyadic.from_float(c + sub)) for c in clo])
        if bmin >= r_hi or bmax < r_lo:
            continue
        if bmin >= r_lo and bmax < r_hi:
            measure += sub_vol
            continue
        pts = clo + rng.random((per_cell, n)) * sub
        r = np.sqrt(np.sum(pts * pts, axis=1))
        inside = (r >= r_lo) & (r < r_hi)
        frac = float(np.mean(inside))
        measure += sub_vol * frac
        variance += (sub_vol ** 2) * frac * (1.0 - frac) / max(per_cell - 1, 1)
    return OverlapEstimate(measure, math.sqrt(variance))


def level_function(field: CoefficientField, v: int) -> PiecewiseConstantFunction:
    """The level-v slice sum_m lambda_{v,m} chi_{v,m} as an exact 1-d function."""
    if field.n != 1:
        raise ValueError("level_function requires n=1")
    items = field.level_items(v)
    segs = [(Dyadic(m, -v), Dyadic(m + 1, -v), c) for m, c in items]
    return PiecewiseConstantFunction.from_segments(segs)


def refinement_segments(
    field: CoefficientField,
) -> Iterator[Tuple[Dyadic, Dyadic, Dict[int, complex]]]:
    """Common refinement of all occupied cube extents, with per-level value stacks.

    Sweep over sorted endpoints; each emitted segment carries the map
    {level: coefficient} of every cube covering it.  Segments covered by no
    cube are not emitted.
    """
    if field.n != 1:
        raise ValueError("refinement requires n=1")
    if not field.entries:
        return
    events: Dict[Dyadic, List[Tuple[int, int, complex]]] = {}
    for (v, m), c in field.entries.items():
        lo, hi = Dyadic(m, -v), Dyadic(m + 1, -v)
        events.setdefault(lo, []).append((+1, v, c))
        events.setdefault(hi, []).append((-1, v, c))
    points = sorted(events, key=float)
    # float sort is exact here (coefficient-scale dyadics fit in doubles);
    # verify monotonicity in exact arithmetic anyway
    for a, b in zip(points, points[1:]):
        if not a < b:
            raise AssertionError("breakpoint ordering lost in float sort")
    active: Dict[int, complex] = {}
    for i, pt in enumerate(points):
        # close before open: adjacent same-level cubes share a boundary point
        for sign, v, c in sorted(events[pt], key=lambda t: t[0]):
            if sign > 0:
                active[v] = c
            else:
                del active[v]
        if active and i + 1 < len(points):
            yield pt, points[i + 1], dict(active)


def refine_to_partition(field: CoefficientField, k: int) -> AnnulusPartition:
    """Clip the common refinement to annulus C_k, keeping per-level stacks.

    Breakpoints of each side include the annulus boundaries and every occupied
    cube boundary strictly inside; segment values are {level: coefficient}.
    """
    if field.n != 1:
        raise ValueError("refine_to_partition requires n=1")
    sides = []
    for lo, hi in Annulus(k).intervals():
        bps: List[Dyadic] = []
        vals: List[Dict[int, complex]] = []
        for slo, shi, stack in refinement_segments(field):
            clo = slo if lo < slo else lo
            chi = shi if shi < hi else hi
            if not clo < chi:
                continue
            if not bps:
                bps = [clo, chi]
                vals = [stack]
            elif clo == bps[-1]:
                bps.append(chi)
                vals.append(stack)
            else:
                bps.append(clo)
                vals.append({})
                bps.append(chi)
                vals.append(stack)
        if bps:
            # pad so the annulus boundaries are always breakpoints
            if lo < bps[0]:
                bps.insert(0, lo)
                vals.insert(0, {})
            if bps[-1] < hi:
                bps.append(hi)
                vals.append({})
        sides.append(Partition1D(bps, vals))
    return AnnulusPartition(k=k, negative=sides[0], positive=sides[1])
