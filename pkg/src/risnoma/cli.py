"""Command-line front end: JSON experiment config in, CSV curves out.

Usage::

    risnoma --config experiment.json --out results/

See README.md for the configuration schema.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, TextIO

from .analytic import SubstitutionMode
from .montecarlo import (
    BracketError,
    BerCurve,
    ConfigError,
    PrecisionError,
    SimConfig,
    allocation_table,
    analytic_awgn_point,
    analytic_point,
    equalize_allocation,
    run_conventional_baseline,
    run_sweep,
    snr_at_ber,
)
from .special import gauss_legendre_half_pi

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

KINDS = ("analytic", "simulate", "sweep-n", "sweep-alpha", "allocate", "baseline")
CURVE_HEADER = ("snr_db", "nu_ber", "nu_ci95", "fu_ber", "fu_ci95",
                "nu_ber_analytic", "fu_ber_analytic", "trials", "flags")
ALLOCATION_HEADER = ("n_nu", "n_fu", "nu_ber_analytic", "fu_ber_analytic", "abs_log10_gap")

_COMMON = {"kind", "alpha", "es", "snr_grid_db", "nu_var_db", "fu_var_db", "mode",
           "quad_order", "output_path", "target_bers"}
_SIM = {"seed", "min_errors", "max_trials", "chunk_size", "workers", "noiseless",
        "include_analytic"}
_SPLIT = {"n_total", "n_nu", "n_fu"}
ALLOWED_KEYS = {
    "analytic": _COMMON | _SPLIT,
    "simulate": _COMMON | _SIM | _SPLIT,
    "sweep-n": _COMMON | _SIM | {"n_values"},
    "sweep-alpha": (_COMMON - {"alpha"}) | _SIM | _SPLIT | {"alpha_values"},
    "allocate": _COMMON | {"n_total", "probe_snr_db"},
    "baseline": _COMMON | _SIM | {"fading"},
}
ALL_KEYS = set().union(*ALLOWED_KEYS.values())


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    sim: SimConfig
    mode: SubstitutionMode = SubstitutionMode.CONSISTENT
    output_path: Path = Path("results")
    quad_order: int = 64
    workers: int = 1
    include_analytic: bool = False
    n_values: tuple[int, ...] = (8, 16, 32, 64)
    alpha_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    probe_snr_db: float = 0.0
    fading: str = "rayleigh"
    target_bers: tuple[float, ...] = (1e-3, 1e-4)
    explicit: frozenset = field(default_factory=frozenset)


def _number(doc, key, lo=None, hi=None, integer=False, lo_open=False, hi_open=False):
    v = doc[key]
    ok_type = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok_type or (not integer and not math.isfinite(v)):
        raise ConfigError(f"{key}: expected {'an integer' if integer else 'a number'}, got {v!r}")
    below = lo is not None and (v <= lo if lo_open else v < lo)
    above = hi is not None and (v >= hi if hi_open else v > hi)
    if below or above:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise ConfigError(f"{key}: {v!r} outside legal range {lb}{lo if lo is not None else '-inf'}, "
                          f"{hi if hi is not None else 'inf'}{rb}")
    return v


def _number_list(doc, key, **kw):
    v = doc[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key}: expected a non-empty list")
    out = []
    for i, item in enumerate(v):
        out.append(_number({f"{key}[{i}]": item}, f"{key}[{i}]", **kw))
    return out


def parse_config(text: str) -> ExperimentSpec:
    """Parse and validate a JSON experiment document, filling every default."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<document>: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>: top level must be a JSON object")
    kind = doc.get("kind", "simulate")
    if kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}, got {kind!r}")
    for key in doc:
        if key not in ALL_KEYS:
            raise ConfigError(f"{key}: unknown key")
        if key not in ALLOWED_KEYS[kind]:
            raise ConfigError(f"{key}: not used by kind {kind!r}; remove it")

    sim_kw: dict[str, Any] = {}
    if "alpha" in doc:
        sim_kw["alpha"] = _number(doc, "alpha", 0.0, 0.5, lo_open=True, hi_open=True)
    if "es" in doc:
        sim_kw["es"] = _number(doc, "es", 0.0, lo_open=True)
    for key in ("nu_var_db", "fu_var_db"):
        if key in doc:
            sim_kw[key] = _number(doc, key)
    if "snr_grid_db" in doc:
        sim_kw["snr_grid_db"] = tuple(_number_list(doc, "snr_grid_db"))
    if "n_total" in doc:
        sim_kw["n_total"] = _number(doc, "n_total", 2, integer=True)
    for key in ("n_nu", "n_fu"):
        if key in doc:
            sim_kw[key] = _number(doc, key, 1, integer=True)
    if "seed" in doc:
        sim_kw["seed"] = _number(doc, "seed", 0, 2 ** 64 - 1, integer=True)
    if "min_errors" in doc:
        sim_kw["min_errors"] = _number(doc, "min_errors", 50, integer=True)
    if "max_trials" in doc:
        sim_kw["max_trials"] = _number(doc, "max_trials", 10_000, integer=True)
    if "chunk_size" in doc:
        sim_kw["chunk_size"] = _number(doc, "chunk_size", 1, integer=True)
    if "noiseless" in doc:
        if not isinstance(doc["noiseless"], bool):
            raise ConfigError("noiseless: expected true or false")
        sim_kw["noiseless"] = doc["noiseless"]
    sim = SimConfig(**sim_kw)

    extra: dict[str, Any] = {}
    if "mode" in doc:
        try:
            extra["mode"] = SubstitutionMode(doc["mode"])
        except ValueError:
            raise ConfigError(f"mode: must be 'literal' or 'consistent', got {doc['mode']!r}") from None
    if "quad_order" in doc:
        extra["quad_order"] = _number(doc, "quad_order", 2, integer=True)
    if "workers" in doc:
        extra["workers"] = _number(doc, "workers", 1, integer=True)
    if "output_path" in doc:
        if not isinstance(doc["output_path"], str) or not doc["output_path"]:
            raise ConfigError("output_path: expected a non-empty string")
        extra["output_path"] = Path(doc["output_path"])
    if "include_analytic" in doc:
        if not isinstance(doc["include_analytic"], bool):
            raise ConfigError("include_analytic: expected true or false")
        extra["include_analytic"] = doc["include_analytic"]
    elif kind in ("sweep-n", "sweep-alpha"):
        extra["include_analytic"] = True
    if "n_values" in doc:
        extra["n_values"] = tuple(_number_list(doc, "n_values", lo=2, integer=True))
    if "alpha_values" in doc:
        extra["alpha_values"] = tuple(_number_list(doc, "alpha_values", lo=0.0, hi=0.5,
                                                   lo_open=True, hi_open=True))
    if "probe_snr_db" in doc:
        extra["probe_snr_db"] = _number(doc, "probe_snr_db")
    if "fading" in doc:
        if doc["fading"] not in ("rayleigh", "awgn"):
            raise ConfigError(f"fading: must be 'rayleigh' or 'awgn', got {doc['fading']!r}")
        extra["fading"] = doc["fading"]
    if "target_bers" in doc:
        extra["target_bers"] = tuple(_number_list(doc, "target_bers", lo=0.0, hi=1.0,
                                                  lo_open=True, hi_open=True))
    return ExperimentSpec(kind=kind, sim=sim, explicit=frozenset(doc), **extra)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, str) else _fmt(r) for r in row])


def _curve_rows(cfg: SimConfig, curve: BerCurve | None, analytic):
    rows = []
    for i, snr in enumerate(cfg.snr_grid_db):
        nu_a, fu_a = analytic[i] if analytic is not None else (None, None)
        if curve is None:
            rows.append([snr, None, None, None, None, nu_a, fu_a, None, ""])
        else:
            p = curve[i]
            rows.append([snr, p.nu_ber, p.ci95_nu, p.fu_ber, p.ci95_fu, nu_a, fu_a,
                         p.trials, ";".join(p.flags)])
    return rows


def _stem(kind: str, cfg: SimConfig) -> str:
    return f"{kind}_N{cfg.n_total}_nu{cfg.n_nu}_fu{cfg.n_fu}_alpha{cfg.alpha:g}"


def _report_crossings(report, title, snr, nu, fu, targets):
    parts = []
    for t in targets:
        for user, ber in (("NU", nu), ("FU", fu)):
            try:
                parts.append(f"{user}@{t:g}={snr_at_ber(snr, ber, t, title):.2f} dB")
            except BracketError:
                parts.append(f"{user}@{t:g}=n/a")
    report(f"  {title:<24s} " + "  ".join(parts))


class _Report:
    def __init__(self, out: TextIO | None):
        self.out = out

    def __call__(self, *args, **kw):
        if self.out is not None:
            print(*args, file=self.out, **kw)


def run_experiment(spec: ExperimentSpec, out: TextIO | None = sys.stdout) -> list[Path]:
    """Run ``spec``, write its CSV files and return their paths.

    A summary of SNR crossings and gains at ``spec.target_bers`` goes to
    ``out`` unless it is None.
    """
    quad = gauss_legendre_half_pi(spec.quad_order)
    report = _Report(out)
    written: list[Path] = []
    root = Path(spec.output_path)
    cfg = spec.sim

    def analytic_for(c: SimConfig):
        return [analytic_point(c, s, spec.mode, quad) for s in c.snr_grid_db]

    def emit(name: str, c: SimConfig, curve, analytic):
        path = root / f"{name}.csv"
        _write_csv(path, CURVE_HEADER, _curve_rows(c, curve, analytic))
        written.append(path)
        snr = list(c.snr_grid_db)
        report(f"[{name}]")
        if curve is not None:
            _report_crossings(report, "simulated", snr, curve.ber("nu"), curve.ber("fu"),
                              spec.target_bers)
        if analytic is not None:
            _report_crossings(report, f"analytic ({spec.mode.value})", snr,
                              [a[0] for a in analytic], [a[1] for a in analytic],
                              spec.target_bers)

    if spec.kind == "analytic":
        emit(_stem("analytic", cfg), cfg, None, analytic_for(cfg))

    elif spec.kind == "simulate":
        curve = run_sweep(cfg, spec.workers)
        emit(_stem("simulate", cfg), cfg, curve,
             analytic_for(cfg) if spec.include_analytic else None)

    elif spec.kind == "sweep-n":
        curves = {}
        for n in spec.n_values:
            c = replace(cfg, n_total=n, n_nu=None, n_fu=None)
            curves[n] = (c, run_sweep(c, spec.workers, label=f"N{n}"),
                         analytic_for(c) if spec.include_analytic else None)
            emit(_stem("sweep-n", c), c, curves[n][1], curves[n][2])
        report("gains between successive N (dB, positive = larger N better):")
        ns = list(spec.n_values)
        for a, b in zip(ns, ns[1:]):
            for t in spec.target_bers:
                line = []
                for user in ("nu", "fu"):
                    for src in ("sim", "ana"):
                        ca, cb = curves[a], curves[b]
                        try:
                            if src == "sim":
                                ga = snr_at_ber(ca[0].snr_grid_db, ca[1].ber(user), t)
                                gb = snr_at_ber(cb[0].snr_grid_db, cb[1].ber(user), t)
                            elif ca[2] is not None:
                                k = 0 if user == "nu" else 1
                                ga = snr_at_ber(ca[0].snr_grid_db, [r[k] for r in ca[2]], t)
                                gb = snr_at_ber(cb[0].snr_grid_db, [r[k] for r in cb[2]], t)
                            else:
                                continue
                            line.append(f"{user.upper()}-{src}={ga - gb:.2f}")
                        except BracketError:
                            line.append(f"{user.upper()}-{src}=n/a")
                report(f"  N {a}->{b} @ BER {t:g}: " + "  ".join(line))

    elif spec.kind == "sweep-alpha":
        for a in spec.alpha_values:
            c = replace(cfg, alpha=a)
            emit(_stem("sweep-alpha", c), c, run_sweep(c, spec.workers),
                 analytic_for(c) if spec.include_analytic else None)

    elif spec.kind == "allocate":
        rows = allocation_table(cfg, spec.probe_snr_db, spec.mode, quad)
        n_nu, n_fu = equalize_allocation(cfg, spec.probe_snr_db, spec.mode, quad)
        path = root / f"allocate_table_N{cfg.n_total}_probe{spec.probe_snr_db:g}dB.csv"
        _write_csv(path, ALLOCATION_HEADER, [list(r) for r in rows])
        written.append(path)
        report(f"equalizing split at {spec.probe_snr_db:g} dB: n_nu={n_nu}, n_fu={n_fu}")
        chosen = replace(cfg, n_nu=n_nu, n_fu=n_fu)
        emit(_stem("allocate", chosen), chosen, None, analytic_for(chosen))

    elif spec.kind == "baseline":
        curve = run_conventional_baseline(cfg, spec.workers, fading=spec.fading)
        analytic = None
        if spec.include_analytic and spec.fading == "awgn":
            analytic = [analytic_awgn_point(cfg, s) for s in cfg.snr_grid_db]
        emit(f"baseline_{spec.fading}_alpha{cfg.alpha:g}", cfg, curve, analytic)

    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risnoma",
                                description="RIS-assisted two-user NOMA BER experiments")
    p.add_argument("--config", required=True, help="JSON experiment document")
    p.add_argument("--out", help="output directory (overrides output_path)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    p.add_argument("--mode", choices=("literal", "consistent"),
                   help="substitution mode for the RIS-averaged expressions")
    p.add_argument("--workers", type=int, help="worker processes for the simulator")
    p.add_argument("--quiet", action="store_true", help="suppress the summary report")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
        spec = parse_config(text)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError(f"--seed: {args.seed} outside [0, 2^64-1]")
            spec = replace(spec, sim=replace(spec.sim, seed=args.seed))
        if args.mode is not None:
            spec = replace(spec, mode=SubstitutionMode(args.mode))
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError(f"--workers: must be >= 1, got {args.workers}")
            spec = replace(spec, workers=args.workers)
        if args.out is not None:
            spec = replace(spec, output_path=Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        paths = run_experiment(spec, out=None if args.quiet else sys.stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PrecisionError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
