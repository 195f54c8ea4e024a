"""Littlewood-Paley resolution, window families, and the discrete phi-transform.

Functions live on a uniform grid over [-L, L), i.e. on a circle of
circumference 2L; spectra use the non-unitary pairing Ff(xi) = int f e^{-i x xi} dx
realised by the FFT with the matching phase and quadrature factors.  Windows
are Meyer-type: the rise of the bandpass profile is sin(pi/2 S(.)) and the
fall cos(pi/2 S(.)) of the same smooth step, so the squares of consecutive
dilates sum to one pointwise and the reproducing identity holds to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .dyadic import CoefficientField
from .herznorm import HerzParams, NormValue, SpaceParams

__all__ = [
    "Grid",
    "SampledFunction",
    "ResolutionOfUnity",
    "WindowFamily",
    "build_resolution_of_unity",
    "build_window_family",
    "analyze",
    "synthesize",
    "function_space_norm",
    "grid_herz_norm",
    "eta_atom_spectrum",
    "omega_atom_spectrum",
    "dilated_atom",
    "random_band_limited",
]

INF = math.inf


# ---------------------------------------------------------------------------
# smooth profiles


def _expbump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    with np.errstate(over="ignore", divide="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    a = _expbump(t)
    b = _expbump(1.0 - t)
    return a / (a + b)


def _lp_plateau(a: np.ndarray) -> np.ndarray:
    """Resolution profile: 1 on [0,1], 0 beyond 1.4, smooth in between.

    The transition ends below 3/2 so that a spectrum inside {3/4 < |xi| < 1},
    dilated to level j, meets exactly one Littlewood-Paley block.
    """
    return smooth_step((1.4 - a) / 0.4)


def window_phi_hat(xi) -> np.ndarray:
    """Bandpass window: supported on {1/2 <= |xi| <= 2}, positive on the interior.

    sin/cos of the same smooth step, so phi_hat(z)^2 + phi_hat(2z)^2 = 1 on
    [1/2, 1]; the squares of all dyadic dilates sum to one away from zero.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    rise = np.sin(0.5 * np.pi * smooth_step(2.0 * a - 1.0))
    fall = np.cos(0.5 * np.pi * smooth_step(a - 1.0))
    return np.where(a <= 1.0, rise, fall)


def window_Phi_hat(xi) -> np.ndarray:
    """Lowpass window: 1 on |xi| <= 1, the bandpass fall on [1, 2], 0 beyond."""
    a = np.abs(np.asarray(xi, dtype=float))
    fall = np.cos(0.5 * np.pi * smooth_step(a - 1.0))
    return np.where(a <= 1.0, 1.0, fall)


def calderon_denominator(xi) -> np.ndarray:
    """D(xi) = |FPhi(xi)|^2 + sum_{j>=1} |Fphi(2^-j xi)|^2 (identically one here)."""
    a = np.abs(np.asarray(xi, dtype=float))
    d = window_Phi_hat(a) ** 2
    top = float(np.max(a)) if a.size else 0.0
    jmax = max(1, int(math.ceil(math.log2(max(top, 1.0)))) + 1)
    for j in range(1, jmax + 1):
        d = d + window_phi_hat(a * 2.0 ** (-j)) ** 2
    return d


def window_psi_hat(xi) -> np.ndarray:
    d = calderon_denominator(xi)
    return np.where(d > 0.5, window_phi_hat(xi) / np.maximum(d, 0.5), 0.0)


def window_Psi_hat(xi) -> np.ndarray:
    d = calderon_denominator(xi)
    return np.where(d > 0.5, window_Phi_hat(xi) / np.maximum(d, 0.5), 0.0)


# ---------------------------------------------------------------------------
# grid and transforms


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``size`` points over [-half_width, half_width).

    Both parameters are powers of two; size >= 2^10 and half_width >= 2 so the
    grid covers several annuli at usable resolution.
    """

    half_width: int
    size: int

    def __post_init__(self):
        L, M = self.half_width, self.size
        if L < 2 or L & (L - 1):
            raise ValueError("half_width must be a power of two >= 2")
        if M < 1024 or M & (M - 1):
            raise ValueError("size must be a power of two >= 1024")
        if M % (2 * L):
            raise ValueError("size must be divisible by 2*half_width")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.size

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.size)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.size, d=self.spacing)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    @property
    def max_level(self) -> int:
        """Deepest level whose translation lattice 2^-v Z is a sub-lattice of the grid."""
        return int(math.log2(self.size // (2 * self.half_width)))

    def to_spectrum(self, samples: np.ndarray) -> np.ndarray:
        """F f(xi_k) = h sum_t f(x_t) e^{-i x_t xi_k} via FFT."""
        phase = np.exp(1j * self.half_width * self.xi)
        return self.spacing * phase * np.fft.fft(samples)

    def from_spectrum(self, spec: np.ndarray) -> np.ndarray:
        phase = np.exp(-1j * self.half_width * self.xi)
        return np.fft.ifft(spec * phase) / self.spacing

    def level_stride(self, v: int) -> int:
        stride = self.size // (2 * self.half_width * (1 << v))
        if stride < 1:
            raise ValueError("level %d exceeds grid bandwidth" % v)
        return stride


@dataclass(frozen=True)
class SampledFunction:
    """Complex samples on a grid; the band-limited stand-in for a distribution."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        if self.samples.shape != (self.grid.size,):
            raise ValueError("sample count does not match grid size")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    def spectrum(self) -> np.ndarray:
        return self.grid.to_spectrum(self.samples)

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.spacing * float(np.sum(np.abs(self.samples) ** 2)))


@dataclass(frozen=True)
class ResolutionOfUnity:
    """Spectral partition {phi_j}: phi_0 + phi_1 + ... = 1 on the covered band."""

    grid: Grid
    blocks: np.ndarray  # shape (J+1, size)

    @property
    def levels(self) -> int:
        return self.blocks.shape[0] - 1

    def sum_error(self) -> float:
        a = np.abs(self.grid.xi)
        covered = a <= 2.0 ** (self.levels - 1)
        total = np.sum(self.blocks, axis=0)
        return float(np.max(np.abs(total[covered] - 1.0)))


def build_resolution_of_unity(grid: Grid, levels: Optional[int] = None) -> ResolutionOfUnity:
    """Telescoping blocks phi_j = p0(2^-j xi) - p0(2^(1-j) xi) on the grid."""
    if levels is None:
        levels = int(math.ceil(math.log2(grid.nyquist)))
    if 2.0 ** (levels - 1) >= grid.nyquist:
        raise ValueError("requested levels exceed grid bandwidth")
    a = np.abs(grid.xi)
    rows = [_lp_plateau(a)]
    for j in range(1, levels + 1):
        rows.append(_lp_plateau(a * 2.0 ** (-j)) - _lp_plateau(a * 2.0 ** (1 - j)))
    return ResolutionOfUnity(grid=grid, blocks=np.stack(rows))


@dataclass(frozen=True)
class WindowFamily:
    """Spectral data for the analysis/synthesis windows on a grid.

    Arrays hold the windows on the grid's own frequency axis; scaled versions
    Fphi(2^-j xi) are evaluated from the closed-form profiles on demand.
    """

    grid: Grid
    Phi: np.ndarray
    Psi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    lower_bound: float
    ass4_error: float

    def analysis_multiplier(self, v: int) -> np.ndarray:
        if v == 0:
            return self.Psi
        return window_phi_hat(self.grid.xi * 2.0 ** (-v))

    def synthesis_multiplier(self, v: int) -> np.ndarray:
        if v == 0:
            return self.Psi
        return window_psi_hat(self.grid.xi * 2.0 ** (-v))


def build_window_family(grid: Grid) -> WindowFamily:
    """Construct windows meeting the support/lower-bound assumptions.

    The reproducing identity conj(FPhi)FPsi + sum_j conj(Fphi)Fpsi(2^-j .) = 1
    holds identically because the denominator D is one everywhere; its grid
    residual is recorded.
    """
    xi = grid.xi
    Phi = window_Phi_hat(xi)
    Psi = window_Psi_hat(xi)
    phi = window_phi_hat(xi)
    psi = window_psi_hat(xi)

    probe = np.linspace(0.6, 5.0 / 3.0, 4097)
    c_phi = float(np.min(window_phi_hat(probe)))
    c_Phi = float(np.min(window_Phi_hat(np.linspace(0.0, 5.0 / 3.0, 4097))))
    c = min(c_phi, c_Phi)

    ident = np.conj(Phi) * Psi
    jmax = max(1, int(math.ceil(math.log2(max(grid.nyquist, 1.0)))) + 1)
    for j in range(1, jmax + 1):
        scaled = xi * 2.0 ** (-j)
        ident = ident + np.conj(window_phi_hat(scaled)) * window_psi_hat(scaled)
    err = float(np.max(np.abs(ident - 1.0)))
    return WindowFamily(
        grid=grid, Phi=Phi, Psi=Psi, phi=phi, psi=psi, lower_bound=c, ass4_error=err
    )


def analyze(f: SampledFunction, w: WindowFamily, vmax: int) -> CoefficientField:
    """phi-transform: level-0 inner products against translated Psi, deeper
    levels against 2^{v/2} phi(2^v x - m), all through the spectral side."""
    grid = f.grid
    if vmax > grid.max_level:
        raise ValueError("vmax %d exceeds grid bandwidth (max %d)" % (vmax, grid.max_level))
    spec = f.spectrum()
    entries: Dict[Tuple[int, int], complex] = {}
    for v in range(vmax + 1):
        mult = np.conj(w.analysis_multiplier(v))
        arr = grid.from_spectrum(spec * mult)
        stride = grid.level_stride(v)
        coeffs = (2.0 ** (-v / 2.0)) * arr[::stride]
        offset = grid.half_width * (1 << v)
        for j, val in enumerate(coeffs):
            if val != 0:
                entries[(v, j - offset)] = complex(val)
    return CoefficientField(1, entries)


def synthesize(field: CoefficientField, w: WindowFamily, grid: Grid) -> SampledFunction:
    """Inverse phi-transform sum_m lambda_{0,m} Psi_m + sum_{v,m} lambda_{v,m} psi_{v,m}."""
    if field.n != 1:
        raise ValueError("synthesis requires n=1 fields")
    if field.entries and field.vmax > grid.max_level:
        raise ValueError("field level %d exceeds grid bandwidth" % field.vmax)
    spec_out = np.zeros(grid.size, dtype=complex)
    for v in field.levels():
        stride = grid.level_stride(v)
        offset = grid.half_width * (1 << v)
        imp = np.zeros(grid.size, dtype=complex)
        for m, c in field.level_items(v):
            j = m + offset
            if not 0 <= j * stride < grid.size:
                raise ValueError("translation index %d outside the grid period" % m)
            imp[j * stride] = c
        lattice_sum = grid.to_spectrum(imp) / grid.spacing
        spec_out += (2.0 ** (-v / 2.0)) * w.synthesis_multiplier(v) * lattice_sum
    return SampledFunction(grid, grid.from_spectrum(spec_out))


# ---------------------------------------------------------------------------
# outer norms by grid quadrature


def grid_herz_norm(values: np.ndarray, grid: Grid, hp: HerzParams) -> NormValue:
    """Herz norm of |values| by midpoint quadrature over annuli.

    Annuli with fewer than eight cells per side and annuli reaching past the
    periodisation edge |x| = L are excluded; their sampled contribution is
    reported as the error bound.
    """
    h = grid.spacing
    absx = np.abs(grid.x)
    mag = np.abs(values)
    nz = absx > 0
    _, ks = np.frexp(absx[nz])
    mag = mag[nz]

    k_min_keep = int(math.ceil(math.log2(8.0 * h))) + 1
    k_max_keep = int(math.floor(math.log2(grid.half_width)))

    k_lo = int(ks.min())
    shift = -k_lo
    nbins = int(ks.max()) + shift + 1
    alpha, p, q = hp.alpha, hp.p, hp.q
    if q == INF:
        sup = np.zeros(nbins)
        np.maximum.at(sup, ks + shift, mag)
        norms = sup
    else:
        acc = np.zeros(nbins)
        np.add.at(acc, ks + shift, mag ** q)
        norms = (h * acc) ** (1.0 / q)
    kk = np.arange(nbins) - shift
    terms = (2.0 ** (kk * alpha)) * norms
    kept = (kk >= k_min_keep) & (kk <= k_max_keep)

    def combine(mask) -> float:
        t = terms[mask & (terms > 0)]
        if t.size == 0:
            return 0.0
        if p == INF:
            return float(np.max(t))
        return float(np.sum(t ** p) ** (1.0 / p))

    value = combine(kept)
    full = combine(np.ones_like(kept, dtype=bool))
    dropped = max(full - value, 0.0)
    notes = (
        "annuli kept k in [%d, %d]" % (k_min_keep, k_max_keep),
        "dropped inner %d, outer %d"
        % (int(np.sum(~kept & (kk < k_min_keep) & (terms > 0))),
           int(np.sum(~kept & (kk > k_max_keep) & (terms > 0)))),
    )
    return NormValue(value, False, dropped, int(np.sum(kept & (terms > 0))), notes=notes)


def function_space_norm(
    f: SampledFunction,
    sp: SpaceParams,
    weight_gamma: Optional[float] = None,
    resolution: Optional[ResolutionOfUnity] = None,
) -> NormValue:
    """Besov/Triebel-Lizorkin norm of a sampled function (optionally power-weighted).

    Littlewood-Paley pieces come from spectral multiplication; the outer Herz
    (or weighted-Lebesgue, via its Herz form K^{gamma/p, p}_p) norm is midpoint
    quadrature over annuli.
    """
    hp = sp.herz
    if weight_gamma is not None:
        if weight_gamma <= -1.0:
            raise ValueError("power weight requires gamma > -n")
        if hp.alpha != 0.0 or hp.p != hp.q:
            raise ValueError("weighted norms start from the Lebesgue form alpha=0, p=q")
        hp = HerzParams(alpha=weight_gamma / hp.p, p=hp.p, q=hp.q)
    if sp.kind == "F" and (hp.p == INF or hp.q == INF):
        raise ValueError("kind F requires finite p and q")

    grid = f.grid
    rou = resolution if resolution is not None else build_resolution_of_unity(grid)
    spec = f.spectrum()
    beta = sp.beta

    if sp.kind == "B":
        weighted: List[Tuple[float, NormValue]] = []
        for j in range(rou.levels + 1):
            block = rou.blocks[j]
            if not np.any(block):
                continue
            g = grid.from_spectrum(spec * block)
            nv = grid_herz_norm(g, grid, hp)
            if nv.value > 0.0 or nv.error_bound > 0.0:
                weighted.append((2.0 ** (j * sp.s), nv))
        if not weighted:
            return NormValue(0.0, False, 0.0, 0)
        if beta == INF:
            value = max(wt * nv.value for wt, nv in weighted)
            err = max(wt * nv.error_bound for wt, nv in weighted)
            return NormValue(value, False, err, sum(nv.tail_terms for _, nv in weighted))
        ssum = sum((wt * nv.value) ** beta for wt, nv in weighted)
        value = ssum ** (1.0 / beta)
        err = 0.0
        if value > 0.0:
            for wt, nv in weighted:
                x = wt * nv.value
                if x > 0:
                    err += (x ** (beta - 1.0)) * wt * nv.error_bound * value ** (1.0 - beta)
        return NormValue(value, False, err, sum(nv.tail_terms for _, nv in weighted))

    # kind F: aggregate inside, Herz outside
    agg = np.zeros(grid.size)
    for j in range(rou.levels + 1):
        block = rou.blocks[j]
        if not np.any(block):
            continue
        g = np.abs(grid.from_spectrum(spec * block))
        wgt = 2.0 ** (j * sp.s)
        if beta == INF:
            agg = np.maximum(agg, wgt * g)
        else:
            agg += (wgt * g) ** beta
    if beta != INF:
        agg = agg ** (1.0 / beta)
    return grid_herz_norm(agg, grid, hp)


# ---------------------------------------------------------------------------
# test atoms and dilation families


def eta_atom_spectrum(xi) -> np.ndarray:
    """Smooth bump supported in {3/4 < |xi| < 1}.

    Transition width 1/8 keeps the spatial envelope tight (scale about eight),
    which the dilation probes rely on for clean truncation windows.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    w = 1.0 / 8.0
    return smooth_step((a - 0.75) / w) * smooth_step((1.0 - a) / w)

def omega_atom_spectrum(xi) -> np.ndarray:
    """Smooth bump supported in {|xi| < 3/4}, identically one on |xi| <= 1/2."""
    a = np.abs(np.asarray(xi, dtype=float))
    return smooth_step((0.75 - a) / 0.25)


def dilated_atom(grid: Grid, family: str, N: int) -> SampledFunction:
    """The probe f_N(x) = atom(2^N x), realised exactly on the spectral side."""
    if family == "fine":
        base: Callable[[np.ndarray], np.ndarray] = eta_atom_spectrum
        if N < 0:
            raise ValueError("fine-scale family needs N >= 0")
    elif family == "coarse":
        base = omega_atom_spectrum
        if N > 0:
            raise ValueError("coarse-scale family needs N <= 0")
    else:
        raise ValueError("family must be 'fine' or 'coarse'")
    scale = 2.0 ** (-N)
    if family == "fine" and 2.0 ** N >= grid.nyquist:
        raise ValueError("grid bandwidth insufficient for N=%d" % N)
    spec = scale * base(grid.xi * scale)
    return SampledFunction(grid, grid.from_spectrum(spec.astype(complex)))


def random_band_limited(
    grid: Grid, vmax: int, rng: np.random.Generator
) -> SampledFunction:
    """Random function with spectrum inside the band covered by levels <= vmax."""
    if vmax > grid.max_level:
        raise ValueError("vmax exceeds grid bandwidth")
    envelope = _lp_plateau(np.abs(grid.xi) * 2.0 ** (1 - vmax))
    coeffs = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    spec = envelope * coeffs
    return SampledFunction(grid, grid.from_spectrum(spec))
