"""Embedding laboratory: hypothesis classification, ratio ensembles, sharpness
families, and dilation probes for the discrete F-to-B and B-to-F embeddings.

The classifier assigns a parameter tuple to exactly one hypothesis branch (or
rejects it naming the failed condition) and fixes the fine index of the source
space: the outer exponent r on the equality branch, infinity otherwise.
Ratio ensembles and the lambda^N family run on the exact n=1 norm engine, so
growth laws are measured to rounding, not to sampling error.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dyadic import CoefficientField
from .herznorm import HerzParams, NormValue, SpaceParams, seq_b_norm, seq_f_norm
from .phitransform import Grid, dilated_atom, function_space_norm

__all__ = [
    "CaseRejected",
    "EmbeddingCase",
    "EnsembleSpec",
    "RatioReport",
    "ScalingReport",
    "classify_embedding_case",
    "estimate_embedding_constant",
    "jawerth_sharpness_family",
    "sharpness_norms",
    "dilation_probe",
    "single_level_witness",
    "seq_space_norm",
    "sample_field",
]

INF = math.inf

JAWERTH_BRANCHES = ("A", "B", "C", "D")
FRANKE_BRANCHES = ("E", "F")


class CaseRejected(Exception):
    """Parameter tuple matches no hypothesis branch; carries the failed conditions."""

    def __init__(self, failures: Sequence[str]):
        self.failures = tuple(failures)
        super().__init__("; ".join(self.failures))


@dataclass(frozen=True)
class EmbeddingCase:
    """A classified embedding instance with resolved smoothness and fine index.

    ``theta`` is the aggregation exponent of the F-side space: on the Jawerth
    equality branch it equals r, on every other Jawerth branch it is infinity;
    for the B-to-F direction it is a free parameter of the target.
    """

    kind: str  # "jawerth" | "franke" | "sobolev_shift"
    branch: str
    theta: float
    n: int
    q: float
    s: float
    r: float
    p: float
    alpha1: float
    alpha2: float
    s1: float
    s2: float

    @property
    def source_space(self) -> SpaceParams:
        if self.kind == "jawerth":
            return SpaceParams(HerzParams(self.alpha2, self.r, self.q), self.s2, self.theta, "F")
        if self.kind == "franke":
            return SpaceParams(HerzParams(self.alpha2, self.p, self.q), self.s2, self.p, "B")
        return SpaceParams(HerzParams(self.alpha1, self.p, self.q), self.s2, self.r, "B")

    @property
    def target_space(self) -> SpaceParams:
        if self.kind == "jawerth":
            return SpaceParams(HerzParams(self.alpha1, self.p, self.s), self.s1, self.r, "B")
        if self.kind == "franke":
            return SpaceParams(HerzParams(self.alpha1, self.p, self.s), self.s1, self.theta, "F")
        return SpaceParams(HerzParams(self.alpha1, self.p, self.s), self.s1, self.r, "B")

    @staticmethod
    def probe(
        kind: str,
        *,
        n: int,
        q: float,
        s: float,
        r: float,
        p: float,
        alpha1: float,
        alpha2: float,
        s1: float,
        s2: float,
        theta: float = INF,
    ) -> "EmbeddingCase":
        """Unvalidated case for necessity experiments (branch tag 'X')."""
        return EmbeddingCase(
            kind=kind, branch="X", theta=theta, n=n, q=q, s=s, r=r, p=p,
            alpha1=alpha1, alpha2=alpha2, s1=s1, s2=s2,
        )


def _nq(n: int, e: float) -> float:
    return 0.0 if e == INF else n / e


def classify_embedding_case(
    kind: str,
    *,
    n: int,
    q: float,
    s: float,
    p: float,
    r: Optional[float] = None,
    alpha1: float,
    alpha2: float,
    s1: Optional[float] = None,
    s2: Optional[float] = None,
    theta: Optional[float] = None,
    p0: Optional[float] = None,
) -> EmbeddingCase:
    """Match a parameter tuple against the embedding hypotheses.

    Exactly one smoothness may be omitted; it is derived from the balance line
    s1 - n/s - alpha1 = s2 - n/q - alpha2.  Raises CaseRejected with the list
    of failed hypotheses when no branch matches.
    """
    kind = kind.lower()
    if kind not in ("jawerth", "franke", "sobolev_shift"):
        raise ValueError("unknown embedding kind %r" % kind)
    failures: List[str] = []

    if kind == "sobolev_shift":
        if r is None or p0 is None:
            raise ValueError("sobolev_shift requires r and p0")
        if not (0.0 < p0 < s):
            raise CaseRejected(["0 < p0 < s"])
        if s1 is None:
            raise ValueError("sobolev_shift requires s1")
        s2_shift = s1 + _nq(n, p0) - _nq(n, s)
        if not alpha1 > -_nq(n, s):
            raise CaseRejected(["alpha1 > -n/s"])
        return EmbeddingCase(
            kind=kind, branch="S", theta=r, n=n, q=p0, s=s, r=r, p=p,
            alpha1=alpha1, alpha2=alpha1, s1=s1, s2=s2_shift,
        )

    for name, e in (("q", q), ("s", s), ("p", p)):
        if not e > 0:
            raise ValueError("%s must be positive" % name)
    if r is None:
        raise ValueError("%s requires r" % kind)
    if kind == "jawerth":
        if q == INF or r == INF:
            failures.append("0 < q, r < inf")
    else:
        if q == INF or s == INF or p == INF:
            failures.append("0 < s, p, q < inf")
    if not alpha1 > -_nq(n, s):
        failures.append("alpha1 > -n/s")
    if not alpha2 > -_nq(n, q):
        failures.append("alpha2 > -n/q")
    if failures:
        raise CaseRejected(failures)

    if (s1 is None) == (s2 is None):
        if s1 is None:
            raise ValueError("provide s1 or s2 (the other is derived)")
        lhs = s1 - _nq(n, s) - alpha1
        rhs = s2 - _nq(n, q) - alpha2
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(lhs), abs(rhs)):
            raise CaseRejected(["balance line s1 - n/s - alpha1 = s2 - n/q - alpha2"])
    elif s1 is None:
        s1 = s2 - _nq(n, q) - alpha2 + _nq(n, s) + alpha1
    else:
        s2 = s1 - _nq(n, s) - alpha1 + _nq(n, q) + alpha2

    left = alpha2 + _nq(n, q)
    right = alpha1 + _nq(n, s)

    if kind == "jawerth":
        if q < s:
            if not q <= r:
                failures.append("q <= r")
            if alpha2 > alpha1:
                branch = "A"
            elif alpha2 == alpha1:
                mn = min(s, p)
                if not (q < mn and r <= mn):
                    failures.append("q <= r <= min(s, p) with q < min(s, p)")
                branch = "B"
            else:
                failures.append("alpha2 >= alpha1 (required when q < s)")
                branch = ""
        else:
            if s == INF or q == INF:
                failures.append("0 < s <= q < inf")
            if left > right:
                branch = "C"
            elif left == right:
                if not (q <= r <= p):
                    failures.append("q <= r <= p")
                branch = "D"
            else:
                failures.append("alpha2 + n/q >= alpha1 + n/s (required when s <= q)")
                branch = ""
        if failures:
            raise CaseRejected(failures)
        th = r if branch == "D" else INF
        if theta is not None and theta != th:
            raise CaseRejected(["theta must be %s on branch %s" % (th, branch)])
        return EmbeddingCase(
            kind=kind, branch=branch, theta=th, n=n, q=q, s=s, r=r, p=p,
            alpha1=alpha1, alpha2=alpha2, s1=s1, s2=s2,
        )

    # franke
    th = INF if theta is None else theta
    if not th > 0:
        raise ValueError("theta must be positive")
    if q < s:
        if not alpha2 >= alpha1:
            failures.append("alpha2 >= alpha1 (required when q < s)")
        branch = "E"
    else:
        if not left > right:
            failures.append("alpha2 + n/q > alpha1 + n/s (required when s <= q)")
        branch = "F"
    if failures:
        raise CaseRejected(failures)
    return EmbeddingCase(
        kind=kind, branch=branch, theta=th, n=n, q=q, s=s, r=r, p=p,
        alpha1=alpha1, alpha2=alpha2, s1=s1, s2=s2,
    )


def seq_space_norm(field: CoefficientField, sp: SpaceParams) -> NormValue:
    """Dispatch a sequence norm by space kind (F uses beta as the aggregate)."""
    if sp.kind == "B":
        return seq_b_norm(field, sp)
    return seq_f_norm(field, sp, theta=sp.beta)


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    """Deterministic ensemble of sparse random fields.

    ``sparsity`` entries per member, supports placed uniformly over levels
    0..vmax and annuli -kmax..kmax, magnitudes log-uniform in
    2^[value_log2_range].  Regeneration from ``seed`` is bit-exact and
    independent of evaluation order.
    """

    count: int
    vmax: int
    kmax: int
    sparsity: int
    seed: int
    value_log2_range: Tuple[float, float] = (-8.0, 8.0)

    def __post_init__(self):
        if self.count < 1 or self.sparsity < 1 or self.vmax < 0 or self.kmax < 0:
            raise ValueError("ensemble parameters out of range")


def _draw_entry(rng: np.random.Generator, v: int, kmax: int, lo: float, hi: float):
    k = int(rng.integers(-kmax, kmax + 1))
    vk = v + k
    if vk >= 1:
        m = int(rng.integers(2 ** (vk - 1), 2 ** vk))
    else:
        m = 0
    if rng.integers(0, 2):
        m = -m - 1
    mag = 2.0 ** rng.uniform(lo, hi)
    sign = -1.0 if rng.integers(0, 2) else 1.0
    return (v, m), sign * mag


def sample_field(
    rng: np.random.Generator, spec: EnsembleSpec, extra_levels: int = 0
) -> CoefficientField:
    """One sparse member; with ``extra_levels`` the support extends that many
    levels past vmax (proportionally more entries), so truncation back to vmax
    recovers the base member exactly."""
    lo, hi = spec.value_log2_range
    entries: Dict = {}
    for _ in range(spec.sparsity):
        v = int(rng.integers(0, spec.vmax + 1))
        key, val = _draw_entry(rng, v, spec.kmax, lo, hi)
        entries[key] = val
    if extra_levels > 0:
        n_ext = max(1, (spec.sparsity * extra_levels) // (spec.vmax + 1))
        for _ in range(n_ext):
            v = int(rng.integers(spec.vmax + 1, spec.vmax + extra_levels + 1))
            key, val = _draw_entry(rng, v, spec.kmax, lo, hi)
            entries[key] = val
    return CoefficientField(1, entries)


@dataclass(frozen=True)
class RatioReport:
    """Per-member target/source norm ratios plus truncation-stability diagnostics."""

    ratios: Tuple[float, ...]
    ratios_deep: Tuple[float, ...]
    max_ratio: float
    max_ratio_deep: float
    quantiles: Dict[float, float]
    excluded: int
    vmax: int
    vmax_deep: int
    seed: int

    @property
    def truncation_growth(self) -> float:
        if self.max_ratio == 0.0:
            return INF
        return self.max_ratio_deep / self.max_ratio


def _quantiles(sorted_vals: Sequence[float], qs=(0.5, 0.9, 1.0)) -> Dict[float, float]:
    out = {}
    if not sorted_vals:
        return {q: 0.0 for q in qs}
    for q in qs:
        idx = min(len(sorted_vals) - 1, int(math.ceil(q * len(sorted_vals))) - 1)
        out[q] = sorted_vals[max(idx, 0)]
    return out


def estimate_embedding_constant(
    case: EmbeddingCase,
    spec: EnsembleSpec,
    deep_levels: int = 4,
    threads: int = 1,
) -> RatioReport:
    """Target/source ratio statistics over a deterministic ensemble.

    Members are generated at vmax + deep_levels and truncated back to vmax, so
    the two truncation sizes see coupled fields; a bounded embedding shows up
    as a stable max ratio under deepening.  Divergent or zero-norm members are
    excluded and counted.
    """
    if case.n != 1:
        raise ValueError("exact ratio ensembles require n=1")
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.count)
    src_sp, tgt_sp = case.source_space, case.target_space

    def member(i: int):
        rng = np.random.default_rng(seeds[i])
        deep = sample_field(rng, spec, extra_levels=deep_levels)
        base = deep.truncated(spec.vmax)
        out = []
        for fld in (base, deep):
            if not fld.entries:
                out.append(None)
                continue
            a = seq_space_norm(fld, src_sp)
            b = seq_space_norm(fld, tgt_sp)
            if a.divergent or b.divergent or a.value == 0.0:
                out.append(None)
            else:
                out.append(b.value / a.value)
        return tuple(out)

    if threads == 1:
        results = [member(i) for i in range(spec.count)]
    else:
        workers = None if threads == 0 else threads
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(member, range(spec.count)))

    base_ratios = tuple(r[0] for r in results if r[0] is not None)
    deep_ratios = tuple(r[1] for r in results if r[1] is not None)
    excluded = sum(1 for r in results if r[0] is None or r[1] is None)
    return RatioReport(
        ratios=base_ratios,
        ratios_deep=deep_ratios,
        max_ratio=max(base_ratios, default=0.0),
        max_ratio_deep=max(deep_ratios, default=0.0),
        quantiles=_quantiles(sorted(base_ratios)),
        excluded=excluded,
        vmax=spec.vmax,
        vmax_deep=spec.vmax + deep_levels,
        seed=spec.seed,
    )


# ---------------------------------------------------------------------------
# sharpness family lambda^N


def jawerth_sharpness_family(N: int, case: EmbeddingCase) -> CoefficientField:
    """The one-dimensional witness lambda^N: active only at m = 1.

    Level v carries 2^{-(s1 - 1/s - alpha1) v} exactly when the point 2^{v-1}
    lies in one of the first N annuli, i.e. for v = 1..N; the cube Q_{v,1}
    then fills the positive half of annulus C_{1-v}.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if case.n != 1:
        raise ValueError("the sharpness family is one-dimensional")
    rate = case.s1 - 1.0 / case.s - case.alpha1 if case.s != INF else case.s1 - case.alpha1
    entries = {(v, 1): 2.0 ** (-rate * v) for v in range(1, N + 1)}
    return CoefficientField(1, entries)


def sharpness_norms(
    N: int, case: EmbeddingCase, sigma: float
) -> Tuple[float, float]:
    """(||lambda^N||_{f_theta}^r on the source side, ||lambda^N||_{b_sigma}^sigma
    on the target side); both grow linearly in N with N-free constants."""
    fld = jawerth_sharpness_family(N, case)
    f_val = seq_f_norm(fld, case.source_space, theta=case.theta).value
    tgt = replace(case.target_space, beta=sigma)
    b_val = seq_b_norm(fld, tgt).value
    return f_val ** case.r, b_val ** sigma


def single_level_witness(
    source: SpaceParams, target: SpaceParams, levels: Iterable[int]
) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    """Target/source ratios of the one-cube fields {(v, 1) -> 1}.

    On the balance line the ratio is level-free; a gap g in the balance line
    makes it grow like 2^{g v}.
    """
    vs = tuple(int(v) for v in levels)
    ratios = []
    for v in vs:
        fld = CoefficientField(1, {(v, 1): 1.0})
        a = seq_space_norm(fld, source)
        b = seq_space_norm(fld, target)
        ratios.append(b.value / a.value)
    return vs, tuple(ratios)


# ---------------------------------------------------------------------------
# dilation probes


@dataclass(frozen=True)
class ScalingReport:
    """Fitted dilation exponents of both sides of an embedding case."""

    family: str
    Ns: Tuple[int, ...]
    source_norms: Tuple[float, ...]
    target_norms: Tuple[float, ...]
    source_exponent: float
    target_exponent: float
    theory_source: float
    theory_target: float
    ratio_drift: float
    balance_necessary_ok: bool
    alpha_necessary_ok: bool

    @property
    def source_rel_error(self) -> float:
        return abs(self.source_exponent - self.theory_source) / max(abs(self.theory_source), 1e-12)

    @property
    def target_rel_error(self) -> float:
        return abs(self.target_exponent - self.theory_target) / max(abs(self.theory_target), 1e-12)


def _fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def dilation_probe(
    family: str,
    N_values: Sequence[int],
    case: EmbeddingCase,
    grid_size: int = 1 << 16,
    base_half_width: int = 64,
    weight_gammas: Optional[Tuple[float, float]] = None,
) -> ScalingReport:
    """Measure the dilation scaling of both sides on fine or coarse probes.

    Grids follow the dilation (half-width L0 2^-N at fixed size), so annulus
    truncation windows are comparable across N and the fitted exponents are
    clean.  With ``weight_gammas`` the two sides are evaluated as power-weighted
    Besov/Triebel-Lizorkin norms through their Herz form.
    """
    Ns = sorted(int(N) for N in N_values)
    if family == "fine" and min(Ns) < 0:
        raise ValueError("fine-scale probes need N >= 0")
    if family == "coarse" and max(Ns) > 0:
        raise ValueError("coarse-scale probes need N <= 0")

    if weight_gammas is None:
        src_sp, tgt_sp = case.source_space, case.target_space
        g_src = g_tgt = None
    else:
        g2, g1 = weight_gammas[1], weight_gammas[0]
        src_sp = SpaceParams(HerzParams(0.0, case.q, case.q), case.s2, case.theta,
                             "F" if case.kind == "jawerth" else "B")
        tgt_sp = SpaceParams(HerzParams(0.0, case.s, case.s), case.s1, case.r,
                             "B" if case.kind == "jawerth" else "F")
        g_src, g_tgt = g2, g1

    src_vals, tgt_vals = [], []
    for N in Ns:
        L = base_half_width * 2 ** (-N) if N <= 0 else base_half_width // (1 << N)
        if not isinstance(L, int) or L < 2:
            raise ValueError("grid bandwidth insufficient for N=%d" % N)
        grid = Grid(int(L), grid_size)
        f_N = dilated_atom(grid, family, N)
        src_vals.append(function_space_norm(f_N, src_sp, weight_gamma=g_src).value)
        tgt_vals.append(function_space_norm(f_N, tgt_sp, weight_gamma=g_tgt).value)

    n = case.n
    nq = 0.0 if case.q == INF else n / case.q
    ns = 0.0 if case.s == INF else n / case.s
    if weight_gammas is None:
        a1, a2 = case.alpha1, case.alpha2
    else:
        a1, a2 = weight_gammas[0] / case.s, weight_gammas[1] / case.q
    if family == "fine":
        theory_src = case.s2 - a2 - nq
        theory_tgt = case.s1 - a1 - ns
    else:
        theory_src = -(a2 + nq)
        theory_tgt = -(a1 + ns)

    src_exp = _fit_slope(Ns, [math.log2(v) for v in src_vals])
    tgt_exp = _fit_slope(Ns, [math.log2(v) for v in tgt_vals])
    ratios = [t / s for s, t in zip(src_vals, tgt_vals)]
    drift = max(ratios) / min(ratios) - 1.0 if ratios else 0.0
    return ScalingReport(
        family=family,
        Ns=tuple(Ns),
        source_norms=tuple(src_vals),
        target_norms=tuple(tgt_vals),
        source_exponent=src_exp,
        target_exponent=tgt_exp,
        theory_source=theory_src,
        theory_target=theory_tgt,
        ratio_drift=drift,
        balance_necessary_ok=(case.s1 - ns - a1) <= (case.s2 - nq - a2) + 1e-12,
        alpha_necessary_ok=(a2 + nq) >= (a1 + ns) - 1e-12,
    )
