"""Batch driver: parse a run configuration, execute, emit JSON + CSV reports.

Config files are flat key = value text under [section] headers (configparser
syntax); extended exponents are written ``inf``.  Exit codes: 0 success,
2 malformed configuration, 3 hypothesis rejection, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .dyadic import CoefficientField
from .embedlab import (
    CaseRejected,
    EmbeddingCase,
    EnsembleSpec,
    classify_embedding_case,
    dilation_probe,
    estimate_embedding_constant,
    sharpness_norms,
)
from .herznorm import HerzParams, SpaceParams, seq_b_norm, seq_f_norm
from .phitransform import (
    Grid,
    analyze,
    build_window_family,
    random_band_limited,
    synthesize,
)

__all__ = ["RunConfig", "parse_config", "serialize_config", "run", "main"]

COMMANDS = ("norm", "verify", "sharpness", "dilate", "roundtrip")
STOCHASTIC = ("verify", "roundtrip")
CSV_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REJECTED = 3
EXIT_DIVERGENT = 4


class ConfigError(Exception):
    pass


class DivergentResult(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration: command plus raw per-section key/value maps."""

    command: str
    seed: Optional[int]
    threads: int
    out: Optional[str]
    sections: Dict[str, Dict[str, str]]

    def section(self, name: str) -> Dict[str, str]:
        return self.sections.get(name, {})


def _parse_number(text: str, name: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise ConfigError("key %s: cannot parse %r as a number" % (name, text))


def _get_float(sec: Dict[str, str], key: str, default=None, required=False) -> Optional[float]:
    if key not in sec:
        if required:
            raise ConfigError("missing required key %r" % key)
        return default
    return _parse_number(sec[key], key)


def _get_int(sec: Dict[str, str], key: str, default=None, required=False) -> Optional[int]:
    v = _get_float(sec, key, default=default, required=required)
    if v is None:
        return None
    if v != int(v):
        raise ConfigError("key %r must be an integer" % key)
    return int(v)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config parse failure: %s" % exc)
    sections = {name: dict(cp.items(name)) for name in cp.sections()}
    run_sec = sections.get("run")
    if run_sec is None:
        raise ConfigError("missing [run] section")
    command = run_sec.get("command", "").strip()
    if command not in COMMANDS:
        raise ConfigError("command must be one of %s, got %r" % (", ".join(COMMANDS), command))
    seed = _get_int(run_sec, "seed")
    if command in STOCHASTIC and seed is None:
        raise ConfigError("command %r is stochastic: seed is mandatory" % command)
    threads = _get_int(run_sec, "threads", default=1)
    if threads < 0:
        raise ConfigError("threads must be >= 0 (0 = auto)")
    out = run_sec.get("out")
    return RunConfig(command=command, seed=seed, threads=threads, out=out, sections=sections)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(parse(t))) == parse(t)."""
    cp = configparser.ConfigParser(interpolation=None)
    for name in sorted(cfg.sections):
        cp[name] = dict(sorted(cfg.sections[name].items()))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# builders


def _space_from(sec: Dict[str, str]) -> SpaceParams:
    hp = HerzParams(
        alpha=_get_float(sec, "alpha", required=True),
        p=_get_float(sec, "p", required=True),
        q=_get_float(sec, "q", required=True),
    )
    kind = sec.get("kind", "B").strip().upper()
    return SpaceParams(hp, s=_get_float(sec, "s", required=True),
                       beta=_get_float(sec, "beta", required=True), kind=kind)


def _field_from(sec: Dict[str, str]) -> CoefficientField:
    raw = sec.get("entries")
    if raw is None:
        raise ConfigError("[field] needs an 'entries' block of 'v m value [imag]' lines")
    entries = {}
    for line in raw.strip().splitlines():
        parts = line.split()
        if len(parts) not in (3, 4):
            raise ConfigError("bad field entry line: %r" % line)
        v, m = int(parts[0]), int(parts[1])
        val = float(parts[2]) + (1j * float(parts[3]) if len(parts) == 4 else 0.0)
        entries[(v, m)] = val
    return CoefficientField(1, entries)


def _case_from(sec: Dict[str, str], strict: bool = True) -> EmbeddingCase:
    kind = sec.get("kind", "jawerth").strip().lower()
    kwargs = dict(
        n=_get_int(sec, "n", default=1),
        q=_get_float(sec, "q", required=True),
        s=_get_float(sec, "s", required=True),
        p=_get_float(sec, "p", required=True),
        r=_get_float(sec, "r"),
        alpha1=_get_float(sec, "alpha1", required=True),
        alpha2=_get_float(sec, "alpha2", required=True),
        s1=_get_float(sec, "s1"),
        s2=_get_float(sec, "s2"),
        theta=_get_float(sec, "theta"),
        p0=_get_float(sec, "p0"),
    )
    if strict:
        return classify_embedding_case(kind, **kwargs)
    # probe mode: both smoothness values given, hypotheses possibly violated
    if kwargs["s1"] is None or kwargs["s2"] is None:
        return classify_embedding_case(kind, **kwargs)
    return EmbeddingCase.probe(
        kind, n=kwargs["n"], q=kwargs["q"], s=kwargs["s"], r=kwargs["r"] or 1.0,
        p=kwargs["p"], alpha1=kwargs["alpha1"], alpha2=kwargs["alpha2"],
        s1=kwargs["s1"], s2=kwargs["s2"],
        theta=kwargs["theta"] if kwargs["theta"] is not None else math.inf,
    )


def _case_echo(case: EmbeddingCase) -> Dict[str, object]:
    return {
        "kind": case.kind, "branch": case.branch, "theta": case.theta, "n": case.n,
        "q": case.q, "s": case.s, "r": case.r, "p": case.p,
        "alpha1": case.alpha1, "alpha2": case.alpha2, "s1": case.s1, "s2": case.s2,
    }


# ---------------------------------------------------------------------------
# command implementations; each returns (summary dict, csv header, csv rows)


def _cmd_norm(cfg: RunConfig):
    field = _field_from(cfg.section("field"))
    sec = cfg.section("space")
    sp = _space_from(sec)
    theta = _get_float(sec, "theta")
    if sp.kind == "B":
        nv = seq_b_norm(field, sp)
    else:
        nv = seq_f_norm(field, sp, theta=theta)
    if nv.divergent:
        raise DivergentResult("norm diverges for the supplied parameters")
    summary = {
        "value": nv.value, "exact": nv.exact, "error_bound": nv.error_bound,
        "tail_terms": nv.tail_terms, "divergent": nv.divergent,
        "space": {"alpha": sp.herz.alpha, "p": sp.herz.p, "q": sp.herz.q,
                  "s": sp.s, "beta": sp.beta, "kind": sp.kind,
                  "theta": theta if theta is not None else sp.beta},
        "entries": len(field),
    }
    rows = [[0, nv.value, nv.exact, nv.error_bound, nv.divergent]]
    return summary, ["row", "value", "exact", "error_bound", "divergent"], rows


def _cmd_verify(cfg: RunConfig):
    case = _case_from(cfg.section("case"), strict=True)
    ens = cfg.section("ensemble")
    spec = EnsembleSpec(
        count=_get_int(ens, "count", default=200),
        vmax=_get_int(ens, "vmax", default=10),
        kmax=_get_int(ens, "kmax", default=12),
        sparsity=_get_int(ens, "sparsity", default=12),
        seed=cfg.seed,
    )
    rep = estimate_embedding_constant(case, spec, threads=cfg.threads)
    summary = {
        "case": _case_echo(case),
        "ensemble": {"count": spec.count, "vmax": spec.vmax, "kmax": spec.kmax,
                     "sparsity": spec.sparsity, "seed": spec.seed},
        "max_ratio": rep.max_ratio,
        "max_ratio_deep": rep.max_ratio_deep,
        "truncation_growth": rep.truncation_growth,
        "quantiles": {str(k): v for k, v in rep.quantiles.items()},
        "excluded": rep.excluded,
        "vmax_deep": rep.vmax_deep,
    }
    rows = [
        [i, r, rd]
        for i, (r, rd) in enumerate(zip(rep.ratios, rep.ratios_deep))
    ]
    return summary, ["sample", "ratio", "ratio_deep"], rows


def _cmd_sharpness(cfg: RunConfig):
    sec = cfg.section("case")
    case = _case_from(sec, strict=True)
    if case.kind != "jawerth":
        raise ConfigError("sharpness requires a jawerth case")
    sigma = _get_float(sec, "sigma", default=case.p)
    n_min = _get_int(cfg.section("sharpness"), "nmin", default=4)
    n_max = _get_int(cfg.section("sharpness"), "nmax", default=32)
    Ns: List[int] = []
    N = n_min
    while N <= n_max:
        Ns.append(N)
        N *= 2
    rows = []
    prev: Optional[Tuple[float, float]] = None
    results = {}
    for N in Ns:
        f_pow, b_pow = sharpness_norms(N, case, sigma)
        results[N] = (f_pow, b_pow)
        dbl_f = f_pow / results[N // 2][0] if N // 2 in results else ""
        dbl_b = b_pow / results[N // 2][1] if N // 2 in results else ""
        rows.append([N, f_pow, b_pow, dbl_f, dbl_b])
    cross = ""
    if len(Ns) >= 2:
        n0, n1 = Ns[0], Ns[-1]
        c0 = results[n0][1] ** (1.0 / sigma) / results[n0][0] ** (1.0 / case.r)
        c1 = results[n1][1] ** (1.0 / sigma) / results[n1][0] ** (1.0 / case.r)
        cross = {
            "measured": c1 / c0,
            "expected": (n1 / n0) ** (1.0 / sigma - 1.0 / case.r),
        }
    summary = {"case": _case_echo(case), "sigma": sigma, "N": Ns, "cross_ratio": cross}
    return summary, ["N", "f_norm_pow_r", "b_norm_pow_sigma", "doubling_f", "doubling_b"], rows


def _cmd_dilate(cfg: RunConfig):
    sec = cfg.section("case")
    case = _case_from(sec, strict=False)
    dsec = cfg.section("dilate")
    family = dsec.get("family", "fine").strip().lower()
    n_lo = _get_int(dsec, "nmin", default=1 if family == "fine" else -5)
    n_hi = _get_int(dsec, "nmax", default=5 if family == "fine" else 0)
    size = _get_int(dsec, "size", default=1 << 16)
    half_width = _get_int(dsec, "half_width", default=64)
    g1, g2 = _get_float(dsec, "gamma1"), _get_float(dsec, "gamma2")
    gammas = (g1, g2) if g1 is not None and g2 is not None else None
    rep = dilation_probe(family, range(n_lo, n_hi + 1), case,
                         grid_size=size, base_half_width=half_width,
                         weight_gammas=gammas)
    summary = {
        "case": _case_echo(case),
        "family": rep.family,
        "source_exponent": rep.source_exponent,
        "target_exponent": rep.target_exponent,
        "theory_source": rep.theory_source,
        "theory_target": rep.theory_target,
        "ratio_drift": rep.ratio_drift,
        "balance_necessary_ok": rep.balance_necessary_ok,
        "alpha_necessary_ok": rep.alpha_necessary_ok,
        "weight_gammas": list(gammas) if gammas else None,
    }
    rows = [
        [N, s, t, t / s]
        for N, s, t in zip(rep.Ns, rep.source_norms, rep.target_norms)
    ]
    return summary, ["N", "source_norm", "target_norm", "ratio"], rows


def _cmd_roundtrip(cfg: RunConfig):
    g = cfg.section("grid")
    grid = Grid(half_width=_get_int(g, "half_width", default=8),
                size=_get_int(g, "size", default=1 << 14))
    vmax = _get_int(g, "vmax", default=grid.max_level)
    count = _get_int(g, "count", default=20)
    fam = build_window_family(grid)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    worst = 0.0
    for i in range(count):
        f = random_band_limited(grid, vmax, rng)
        rec = synthesize(analyze(f, fam, vmax), fam, grid)
        err = float(np.linalg.norm(rec.samples - f.samples) / np.linalg.norm(f.samples))
        worst = max(worst, err)
        rows.append([i, err])
    summary = {
        "grid": {"half_width": grid.half_width, "size": grid.size, "vmax": vmax},
        "trials": count,
        "max_rel_l2_error": worst,
        "calderon_identity_error": fam.ass4_error,
        "window_lower_bound": fam.lower_bound,
    }
    return summary, ["trial", "rel_l2_error"], rows


# ---------------------------------------------------------------------------
# driver


def _format_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run(cfg: RunConfig, out_dir: Path) -> int:
    """Execute a parsed configuration, writing <command>_summary.json and
    <command>_rows.csv into ``out_dir``."""
    impl = {
        "norm": _cmd_norm,
        "verify": _cmd_verify,
        "sharpness": _cmd_sharpness,
        "dilate": _cmd_dilate,
        "roundtrip": _cmd_roundtrip,
    }[cfg.command]
    summary, header, rows = impl(cfg)
    summary = {
        "command": cfg.command,
        "seed": cfg.seed,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "versions": {
            "herzlab": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "result": summary,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / ("%s_summary.json" % cfg.command)
    csv_path = out_dir / ("%s_rows.csv" % cfg.command)
    json_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(c) for c in row])
    print(json.dumps({"ok": True, "summary": str(json_path), "rows": str(csv_path)}))
    return EXIT_OK


def _error(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": {"exit_code": code, "kind": kind, "message": message}}))
    return code


def main(argv: Optional[List[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="herzlab", description=__doc__)
    ap.add_argument("--config", required=True, help="path to the run configuration")
    ap.add_argument("--out", default=None, help="output directory (default: HERZLAB_OUT or cwd)")
    ap.add_argument("--seed", type=int, default=None, help="override the configured seed")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")
    args = ap.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        return _error(EXIT_CONFIG, "config", "cannot read config: %s" % exc)
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            cfg.sections.setdefault("run", {})["seed"] = str(args.seed)
            cfg = parse_config(serialize_config(cfg))
        if args.threads is not None:
            cfg.sections.setdefault("run", {})["threads"] = str(args.threads)
            cfg = parse_config(serialize_config(cfg))
    except ConfigError as exc:
        return _error(EXIT_CONFIG, "config", str(exc))

    out_dir = Path(args.out or cfg.out or os.environ.get("HERZLAB_OUT") or ".")
    try:
        return run(cfg, out_dir)
    except CaseRejected as exc:
        return _error(EXIT_REJECTED, "hypothesis_rejection", "; ".join(exc.failures))
    except DivergentResult as exc:
        return _error(EXIT_DIVERGENT, "divergence", str(exc))
    except ConfigError as exc:
        return _error(EXIT_CONFIG, "config", str(exc))
    except (ValueError, KeyError) as exc:
        return _error(EXIT_CONFIG, "config", str(exc))


if __name__ == "__main__":
    sys.exit(main())
