"""Distribution function, non-increasing rearrangement, and Hardy-type sums.

Rearrangements of piecewise-constant data are computed exactly: segment
lengths accumulate in dyadic arithmetic, so equimeasurability is an identity,
not an approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .dyadic import Dyadic, PiecewiseConstantFunction, ZERO

__all__ = [
    "StepFunctionOnHalfLine",
    "HardyInput",
    "HardyCheck",
    "distribution_function",
    "rearrangement",
    "hardy_sums",
    "hardy_bound_constant",
    "check_hardy_bound",
    "lq_norm",
]

INF = math.inf


class StepFunctionOnHalfLine:
    """Nonincreasing step function on [0, inf), zero beyond the last breakpoint."""

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Sequence, values: Sequence[float]):
        bps = tuple(Dyadic.coerce(b) for b in breakpoints)
        vals = tuple(float(v) for v in values)
        if not bps or not bps[0] == ZERO:
            if bps or vals:
                raise ValueError("breakpoints must start at 0")
        if bps and len(bps) != len(vals) + 1:
            raise ValueError("need one more breakpoint than values")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        for a, b in zip(vals, vals[1:]):
            if b > a:
                raise ValueError("values must be nonincreasing")
        if any(v < 0 for v in vals):
            raise ValueError("values must be nonnegative")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("StepFunctionOnHalfLine is immutable")

    def segments(self):
        for i, v in enumerate(self.values):
            yield self.breakpoints[i], self.breakpoints[i + 1], v

    def __call__(self, t: float) -> float:
        for lo, hi, v in self.segments():
            if float(lo) <= t < float(hi):
                return v
        return 0.0

    def lp_norm(self, p: float) -> float:
        if not self.values:
            return 0.0
        if p == INF:
            return max(self.values)
        s = 0.0
        for lo, hi, v in self.segments():
            if v > 0:
                s += v ** p * float(hi - lo)
        return s ** (1.0 / p)


def distribution_function(f, level: float) -> float:
    """Exact measure of {x : |f(x)| > level}.

    Accepts any object with half-open dyadic ``segments()`` (piecewise-constant
    functions and rearrangements alike); lengths accumulate exactly.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    total = ZERO
    for lo, hi, v in f.segments():
        if abs(v) > level:
            total = total + (hi - lo)
    return float(total)


def rearrangement(f: PiecewiseConstantFunction) -> StepFunctionOnHalfLine:
    """Non-increasing rearrangement f*(t) = sup{l > 0 : |{|f| > l}| > t}.

    For piecewise-constant input this is the segments sorted by decreasing
    modulus, laid end to end from 0; equimeasurable with |f| by construction.
    """
    by_value = {}
    for lo, hi, v in f.segments():
        w = abs(v)
        if w == 0:
            continue
        by_value[w] = by_value.get(w, ZERO) + (hi - lo)
    bps: List[Dyadic] = [ZERO]
    vals: List[float] = []
    acc = ZERO
    for w in sorted(by_value, reverse=True):
        acc = acc + by_value[w]
        bps.append(acc)
        vals.append(w)
    if not vals:
        return StepFunctionOnHalfLine([], [])
    return StepFunctionOnHalfLine(bps, vals)


@dataclass(frozen=True)
class HardyInput:
    """Geometric-convolution input: ratio a in (0,1), exponent q, positive eps_k."""

    a: float
    q: float
    eps: Tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError("a must lie in (0, 1)")
        if not self.q > 0:
            raise ValueError("q must be positive (inf allowed)")
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if any(e <= 0 for e in self.eps):
            raise ValueError("eps entries must be positive")


def hardy_sums(inp: HardyInput) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """delta_k = sum_{j<=k} a^(k-j) eps_j and eta_k = sum_{j>=k} a^(j-k) eps_j.

    Direct summation; eta uses the available finite tail.
    """
    a, eps = inp.a, inp.eps
    K = len(eps)
    delta = []
    acc = 0.0
    for e in eps:
        acc = acc * a + e
        delta.append(acc)
    eta = [0.0] * K
    acc = 0.0
    for k in range(K - 1, -1, -1):
        acc = acc * a + eps[k]
        eta[k] = acc
    return tuple(delta), tuple(eta)


def lq_norm(seq: Sequence[float], q: float) -> float:
    """l^q quasi-norm of a finite sequence, q in (0, inf]."""
    vals = [abs(x) for x in seq]
    if not vals:
        return 0.0
    if q == INF:
        return max(vals)
    return sum(x ** q for x in vals) ** (1.0 / q)


def hardy_bound_constant(a: float, q: float) -> float:
    """Constant c(a, q) = 2 (1 - a^min(1,q))^(-1/min(1,q)); 2/(1-a) when q = inf."""
    if q == INF:
        return 2.0 / (1.0 - a)
    qt = min(1.0, q)
    return 2.0 * (1.0 - a ** qt) ** (-1.0 / qt)


@dataclass(frozen=True)
class HardyCheck:
    lhs: float
    rhs: float
    constant: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12)


def check_hardy_bound(inp: HardyInput) -> HardyCheck:
    """Assert-ready check of ||delta||_q + ||eta||_q <= c(a, q) ||eps||_q."""
    delta, eta = hardy_sums(inp)
    c = hardy_bound_constant(inp.a, inp.q)
    lhs = lq_norm(delta, inp.q) + lq_norm(eta, inp.q)
    rhs = c * lq_norm(inp.eps, inp.q)
    return HardyCheck(lhs=lhs, rhs=rhs, constant=c)
