"""Herz quasi-norms and the associated sequence-space norms.

In dimension one every norm here is exact: annulus/cube geometry is resolved
in dyadic-rational arithmetic and the infinite stack of annuli crowding the
origin is summed in closed form (a geometric series once the integrand is
constant).  In dimensions two and three the inner integrals come from Monte
Carlo overlap estimates and the results carry propagated error bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dyadic import (
    Annulus,
    CoefficientField,
    Dyadic,
    PiecewiseConstantFunction,
    ZERO,
    annulus_cube_overlap,
    annulus_of,
    cube_extent,
    DyadicCube,
    level_function,
    refinement_segments,
)

__all__ = [
    "HerzParams",
    "SpaceParams",
    "NormValue",
    "herz_norm",
    "seq_b_norm",
    "seq_f_norm",
    "aggregate_function",
]

INF = math.inf


@dataclass(frozen=True)
class HerzParams:
    """Parameters (alpha, p, q) of the Herz space; p and q in (0, inf]."""

    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if not self.p > 0 or not self.q > 0:
            raise ValueError("exponents must be positive (inf allowed)")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")

    def valid_for(self, n: int) -> bool:
        """Validity of the space: alpha > -n/q (with -n/inf = 0)."""
        return self.alpha > -(n / self.q if self.q != INF else 0.0)


@dataclass(frozen=True)
class SpaceParams:
    """Smoothness-space parameters on top of a Herz layer.

    ``beta`` is the fine index: the l^beta sum over levels for kind "B", the
    inner aggregation exponent for kind "F".
    """

    herz: HerzParams
    s: float
    beta: float
    kind: str

    def __post_init__(self):
        if self.kind not in ("B", "F"):
            raise ValueError("kind must be 'B' or 'F'")
        if not self.beta > 0:
            raise ValueError("beta must be positive (inf allowed)")
        if not math.isfinite(self.s):
            raise ValueError("smoothness must be finite")


@dataclass(frozen=True)
class NormValue:
    """Norm result with exactness bookkeeping.

    ``tail_terms`` counts the annulus terms that were enumerated explicitly;
    when the support reaches the origin the remaining (infinite) tail is folded
    in analytically.  ``divergent`` marks an infinite norm; the value is inf.
    """

    value: float
    exact: bool
    error_bound: float
    tail_terms: int
    divergent: bool = False
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.exact and self.error_bound != 0.0:
            raise ValueError("exact result must have zero error bound")
        if not self.divergent and not self.value >= 0.0:
            raise ValueError("norm value must be nonnegative")


_ZERO_NORM = NormValue(0.0, True, 0.0, 0)


def _powers_between(a: Dyadic, b: Dyadic) -> List[Dyadic]:
    """All 2^j with a < 2^j < b, for 0 < a < b."""
    out = []
    j = annulus_of(a)  # 2^(j-1) <= a < 2^j
    # a < 2^j always holds; walk up while inside (a, b)
    while Dyadic.pow2(j) < b:
        if a < Dyadic.pow2(j):
            out.append(Dyadic.pow2(j))
        j += 1
    return out


def _positive_pieces(segs):
    """Split positive-axis segments at dyadic powers; yield (k, length, weight)."""
    for lo, hi, w in segs:
        cuts = [lo] + _powers_between(lo, hi) + [hi]
        for a, b in zip(cuts, cuts[1:]):
            mid = (a + b).half()
            yield annulus_of(mid), float(b - a), w


def _tail_closed_form(
    cplus: float, cminus: float, k0: int, hp: HerzParams
) -> Tuple[float, bool]:
    """Origin tail over annuli k <= k0 where the integrand is (cplus, cminus).

    Returns (tail, divergent): for finite p the sum of u_k^p, for p = inf the
    supremum of u_k, with u_k = 2^{k alpha} * ||const * chi_k||_q.  Converges
    iff alpha + n/q > 0, and additionally at alpha + n/q = 0 when p = inf.
    """
    alpha, p, q = hp.alpha, hp.p, hp.q
    if cplus == 0.0 and cminus == 0.0:
        return 0.0, False
    if q == INF:
        rate = alpha
        base = max(cplus, cminus)  # u_k = 2^{k alpha} * base
        u_k0 = base * 2.0 ** (k0 * alpha)
    else:
        rate = alpha + 1.0 / q
        base = (cplus ** q + cminus ** q) ** (1.0 / q) * 2.0 ** (-1.0 / q)
        u_k0 = base * 2.0 ** (k0 * rate)
    if p == INF:
        if rate < 0.0:
            return INF, True
        return u_k0, False  # supremum attained at k = k0 (all equal when rate == 0)
    if rate <= 0.0:
        return INF, True
    return (u_k0 ** p) / (1.0 - 2.0 ** (-rate * p)), False


def herz_norm(f: PiecewiseConstantFunction, hp: HerzParams) -> NormValue:
    """Exact Herz quasi-norm of a piecewise-constant function on the line.

    (sum_k 2^{k alpha p} ||f chi_k||_q^p)^{1/p}, with sup over k when p = inf
    and the essential supremum per annulus when q = inf.  Annuli below the
    finest breakpoint near the origin are summed as a geometric series, so the
    result is exact, not truncated.  A truly divergent sum (possible only when
    alpha <= -1/q with mass at the origin) is flagged, not raised.
    """
    raw = [(lo, hi, abs(v)) for lo, hi, v in f.segments() if v != 0]
    if not raw:
        return _ZERO_NORM

    pos: List[Tuple[Dyadic, Dyadic, float]] = []
    neg: List[Tuple[Dyadic, Dyadic, float]] = []  # mirrored to the positive axis
    cplus = cminus = 0.0
    for lo, hi, w in raw:
        if lo < ZERO and ZERO < hi:
            parts = [(lo, ZERO), (ZERO, hi)]
        else:
            parts = [(lo, hi)]
        for a, b in parts:
            if a == ZERO:
                cplus = w
            if b == ZERO:
                cminus = w
            if ZERO <= a:
                pos.append((a, b, w))
            else:
                neg.append((-b, -a, w))

    eps: Optional[Dyadic] = None
    for a, b, _ in pos + neg:
        for e in (a, b):
            if ZERO < e and (eps is None or e < eps):
                eps = e
    assert eps is not None
    k0 = annulus_of(eps) - 1  # annuli k <= k0 lie inside (0, eps]

    origin_touch = cplus != 0.0 or cminus != 0.0
    if origin_touch:
        tail_cut = Dyadic.pow2(k0)
        clipped = []
        for a, b, w in pos + neg:
            if a == ZERO:
                a = tail_cut  # the (0, 2^k0) part goes to the closed-form tail
            if a < b:
                clipped.append((a, b, w))
    else:
        clipped = pos + neg

    alpha, p, q = hp.alpha, hp.p, hp.q
    per_annulus: Dict[int, float] = {}
    if q == INF:
        for k, _, w in _positive_pieces(clipped):
            per_annulus[k] = max(per_annulus.get(k, 0.0), w)
        terms = {k: (2.0 ** (k * alpha)) * m for k, m in per_annulus.items()}
    else:
        for k, length, w in _positive_pieces(clipped):
            per_annulus[k] = per_annulus.get(k, 0.0) + (w ** q) * length
        terms = {k: (2.0 ** (k * alpha)) * (iq ** (1.0 / q)) for k, iq in per_annulus.items()}

    tail, divergent = _tail_closed_form(cplus, cminus, k0, hp) if origin_touch else (0.0, False)
    if divergent:
        return NormValue(INF, True, 0.0, len(terms), divergent=True)

    if p == INF:
        value = max(list(terms.values()) + [tail]) if (terms or origin_touch) else 0.0
    else:
        value = (sum(t ** p for t in terms.values()) + tail) ** (1.0 / p)
    return NormValue(value, True, 0.0, len(terms))


def _combine_levels(
    weighted: List[Tuple[float, NormValue]], beta: float
) -> NormValue:
    """l^beta combination of per-level norms, with error propagation."""
    if any(nv.divergent for _, nv in weighted):
        return NormValue(INF, True, 0.0, 0, divergent=True)
    exact = all(nv.exact for _, nv in weighted)
    tail_terms = sum(nv.tail_terms for _, nv in weighted)
    notes = tuple(n for _, nv in weighted for n in nv.notes)
    if not weighted:
        return _ZERO_NORM
    if beta == INF:
        value = max(wt * nv.value for wt, nv in weighted)
        err = max(wt * nv.error_bound for wt, nv in weighted)
        return NormValue(value, exact, err if not exact else 0.0, tail_terms, notes=notes)
    s = sum((wt * nv.value) ** beta for wt, nv in weighted)
    value = s ** (1.0 / beta)
    if exact:
        return NormValue(value, True, 0.0, tail_terms, notes=notes)
    # first-order propagation: dV/dx_v = (w x)^/{beta-1} w V^{1-beta}
    err = 0.0
    if value > 0.0:
        for wt, nv in weighted:
            x = wt * nv.value
            if x > 0.0:
                err += (x ** (beta - 1.0)) * wt * nv.error_bound * value ** (1.0 - beta)
    else:
        err = sum(wt * nv.error_bound for wt, nv in weighted)
    return NormValue(value, False, err, tail_terms, notes=notes)


def seq_b_norm(field: CoefficientField, sp: SpaceParams) -> NormValue:
    """Sequence-space b-norm: l^beta over levels of 2^{vs} * Herz norm of the slice."""
    if not field.entries:
        return _ZERO_NORM
    hp = sp.herz
    weighted = []
    for v in field.levels():
        if field.n == 1:
            nv = herz_norm(level_function(field, v), hp)
        else:
            nv = _herz_norm_level_nd(field, v, hp)
        weighted.append((2.0 ** (v * sp.s), nv))
    return _combine_levels(weighted, sp.beta)


def aggregate_function(
    field: CoefficientField, s: float, theta: float
) -> PiecewiseConstantFunction:
    """Pointwise aggregate (sum_v 2^{vs theta} |lambda|^theta)^{1/theta} (sup at theta=inf).

    Piecewise constant on the common refinement of the occupied cubes, so the
    downstream Herz norm stays exact.
    """
    if field.n != 1:
        raise ValueError("aggregate_function requires n=1")
    segs = []
    for lo, hi, stack in refinement_segments(field):
        if theta == INF:
            val = max(2.0 ** (v * s) * abs(c) for v, c in stack.items())
        else:
            val = sum((2.0 ** (v * s) * abs(c)) ** theta for v, c in stack.items()) ** (
                1.0 / theta
            )
        segs.append((lo, hi, val))
    return PiecewiseConstantFunction.from_segments(segs)


def seq_f_norm(
    field: CoefficientField, sp: SpaceParams, theta: Optional[float] = None
) -> NormValue:
    """Sequence-space f-norm: Herz norm of the level-aggregated field.

    ``theta`` overrides ``sp.beta`` as the aggregation exponent; theta = inf is
    the pointwise supremum sup_v 2^{vs} |lambda_{v,m(x)}|.
    """
    th = sp.beta if theta is None else theta
    if not th > 0:
        raise ValueError("theta must be positive (inf allowed)")
    hp = sp.herz
    if hp.p == INF or hp.q == INF:
        raise ValueError("f-norm requires finite p and q")
    if not field.entries:
        return _ZERO_NORM
    if field.n == 1:
        return herz_norm(aggregate_function(field, sp.s, th), hp)
    return _seq_f_norm_nd(field, sp, th)


# ---------------------------------------------------------------------------
# dimensions two and three: Monte Carlo inner integrals, propagated errors


def _origin_cubes(field: CoefficientField, v: int):
    """Level-v cubes whose closure contains the origin (all m_i in {0, -1})."""
    out = {}
    for m, c in field.level_items(v):
        idx = m if isinstance(m, tuple) else (m,)
        if all(mi in (0, -1) for mi in idx):
            out[idx] = c
    return out


def _field_radial_bounds(field: CoefficientField, exclude_origin_cubes: bool):
    rmin, rmax = INF, 0.0
    for (v, m), _ in field.entries.items():
        cube = DyadicCube(v, m)
        lo, hi = _box_bounds(cube, field.n)
        if exclude_origin_cubes and lo == 0.0:
            continue
        rmin = min(rmin, lo)
        rmax = max(rmax, hi)
    return rmin, rmax


def _box_bounds(cube: DyadicCube, n: int) -> Tuple[float, float]:
    ext = cube_extent(cube, n)
    lo2 = hi2 = 0.0
    for a, b in ext:
        fa, fb = float(a), float(b)
        d = 0.0 if fa <= 0.0 <= fb else min(abs(fa), abs(fb))
        lo2 += d * d
        hi2 += max(abs(fa), abs(fb)) ** 2
    return math.sqrt(lo2), math.sqrt(hi2)


def _herz_norm_level_nd(field: CoefficientField, v: int, hp: HerzParams) -> NormValue:
    """Herz norm of one level slice in n in {2,3} from per-cube overlap estimates.

    Same-level cubes are disjoint, so ||slice * chi_k||_q^q decomposes into
    sum_m |lambda|^q |Q \\cap C_k|.  Annuli entirely inside the block of
    origin-adjacent cubes see a constant per orthant and are summed in closed
    form by orthant symmetry of the annulus.
    """
    n = field.n
    alpha, p, q = hp.alpha, hp.p, hp.q
    if q == INF or p == INF:
        raise ValueError("n>=2 norms require finite p and q")
    items = field.level_items(v)
    if not items:
        return _ZERO_NORM
    origin = _origin_cubes(field, v)

    # cutoff below which every annulus is covered only by origin cubes
    eps = 2.0 ** (-v) if origin else None
    rmin_rest = INF
    for m, c in items:
        idx = m if isinstance(m, tuple) else (m,)
        if idx in origin:
            continue
        lo, _ = _box_bounds(DyadicCube(v, idx), n)
        rmin_rest = min(rmin_rest, lo)
    k0 = None
    if origin:
        lim = eps if rmin_rest == INF else min(eps, rmin_rest)
        k0 = int(math.floor(math.log2(lim))) if lim > 0 else None
        while k0 is not None and 2.0 ** k0 > lim:
            k0 -= 1

    integrals: Dict[int, float] = {}
    variances: Dict[int, float] = {}
    for m, c in items:
        idx = m if isinstance(m, tuple) else (m,)
        cube = DyadicCube(v, idx)
        lo, hi = _box_bounds(cube, n)
        if lo == 0.0:
            kstart = k0 + 1  # lo == 0 iff origin cube, so k0 is set
        else:
            kstart = int(math.floor(math.log2(lo))) + 1
        kend = int(math.ceil(math.log2(hi))) + 1
        w = abs(c) ** q
        for k in range(kstart, kend + 1):
            est = annulus_cube_overlap(k, cube, n)
            if est.measure == 0.0 and est.standard_error == 0.0:
                continue
            integrals[k] = integrals.get(k, 0.0) + w * est.measure
            variances[k] = variances.get(k, 0.0) + (w * est.standard_error) ** 2

    tail = 0.0
    divergent = False
    if k0 is not None and origin:
        const_q = sum(abs(c) ** q for c in origin.values())
        rate = alpha + n / q
        shell0 = Annulus(k0).volume(n) / (2 ** n)  # per-orthant share
        u0 = (2.0 ** (k0 * alpha)) * (const_q * shell0) ** (1.0 / q)
        if rate <= 0.0 and const_q > 0.0:
            divergent = True
        else:
            tail = u0 ** p / (1.0 - 2.0 ** (-rate * p))
    if divergent:
        return NormValue(INF, True, 0.0, len(integrals), divergent=True)

    total = tail
    deriv_err = 0.0
    for k, iq in integrals.items():
        u = (2.0 ** (k * alpha)) * iq ** (1.0 / q)
        total += u ** p
    value = total ** (1.0 / p)
    if value > 0.0:
        for k, iq in integrals.items():
            if iq <= 0.0:
                continue
            u = (2.0 ** (k * alpha)) * iq ** (1.0 / q)
            dv_diq = (value ** (1.0 - p)) * (u ** p) / (q * iq)
            deriv_err += abs(dv_diq) * math.sqrt(variances.get(k, 0.0))
    return NormValue(value, False, deriv_err, len(integrals))


def _shell_points(k: int, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample in the annulus C_k (radius density r^{n-1})."""
    r_lo, r_hi = 2.0 ** (k - 1), 2.0 ** k
    u = rng.random(count)
    r = (u * (r_hi ** n - r_lo ** n) + r_lo ** n) ** (1.0 / n)
    if n == 2:
        phi = rng.random(count) * 2.0 * math.pi
        return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    vec = rng.normal(size=(count, n))
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    return vec * r[:, None]


def _aggregate_at_points(field, pts: np.ndarray, s: float, theta: float) -> np.ndarray:
    levels = field.levels()
    acc = np.zeros(len(pts)) if theta != INF else np.zeros(len(pts))
    for v in levels:
        items = dict(
            (m if isinstance(m, tuple) else (m,), abs(c)) for m, c in field.level_items(v)
        )
        idx = np.floor(pts * (2.0 ** v)).astype(np.int64)
        vals = np.array([items.get(tuple(row), 0.0) for row in idx])
        scaled = (2.0 ** (v * s)) * vals
        if theta == INF:
            acc = np.maximum(acc, scaled)
        else:
            acc += scaled ** theta
    return acc if theta == INF else acc ** (1.0 / theta)


def _seq_f_norm_nd(
    field: CoefficientField, sp: SpaceParams, theta: float, samples: int = 4096, seed: int = 0xF00D
) -> NormValue:
    """Monte Carlo f-norm for n in {2,3}: shell sampling of the level aggregate."""
    n = field.n
    hp = sp.herz
    alpha, p, q = hp.alpha, hp.p, hp.q
    origin_stack: Dict[Tuple[int, ...], float] = {}
    for v in field.levels():
        for idx, c in _origin_cubes(field, v).items():
            w = 2.0 ** (v * sp.s) * abs(c)
            if theta == INF:
                prev = origin_stack.get(idx, 0.0)
                origin_stack[idx] = max(prev, w)
            else:
                origin_stack[idx] = origin_stack.get(idx, 0.0) + w ** theta
    if theta != INF:
        origin_stack = {k: val ** (1.0 / theta) for k, val in origin_stack.items()}

    rmin_rest, rmax = _field_radial_bounds(field, exclude_origin_cubes=True)
    eps = min((2.0 ** (-v) for v in field.levels() if _origin_cubes(field, v)), default=None)
    k0 = None
    if origin_stack and eps is not None:
        lim = eps if rmin_rest == INF else min(eps, rmin_rest)
        k0 = int(math.floor(math.log2(lim)))
        while 2.0 ** k0 > lim:
            k0 -= 1
    if rmax == 0.0 and not origin_stack:
        return _ZERO_NORM
    rmax = max(rmax, eps or 0.0)
    k_top = int(math.ceil(math.log2(rmax))) + 1
    k_bottom = (k0 + 1) if k0 is not None else int(math.floor(math.log2(rmin_rest)))

    rng = np.random.default_rng(np.random.SeedSequence((seed, len(field.entries))))
    total = 0.0
    var_acc = []
    for k in range(k_bottom, k_top + 1):
        pts = _shell_points(k, n, samples, rng)
        agg = _aggregate_at_points(field, pts, sp.s, theta)
        vol = Annulus(k).volume(n)
        mean = float(np.mean(agg ** q))
        se = float(np.std(agg ** q, ddof=1) / math.sqrt(samples))
        iq = vol * mean
        if iq == 0.0:
            continue
        var_acc.append((k, iq, vol * se))
        total += ((2.0 ** (k * alpha)) * iq ** (1.0 / q)) ** p

    divergent = False
    if k0 is not None and origin_stack:
        const_q = sum(w ** q for w in origin_stack.values())
        rate = alpha + n / q
        shell0 = Annulus(k0).volume(n) / (2 ** n)
        if rate <= 0.0 and const_q > 0.0:
            divergent = True
        else:
            u0 = (2.0 ** (k0 * alpha)) * (const_q * shell0) ** (1.0 / q)
            total += u0 ** p / (1.0 - 2.0 ** (-rate * p))
    if divergent:
        return NormValue(INF, True, 0.0, len(var_acc), divergent=True)

    value = total ** (1.0 / p)
    err = 0.0
    if value > 0.0:
        for k, iq, se in var_acc:
            u = (2.0 ** (k * alpha)) * iq ** (1.0 / q)
            err += (value ** (1.0 - p)) * (u ** p) / (q * iq) * se
    return NormValue(value, False, err, len(var_acc))
