"""Command line front end: table generation, experiments, calibration.

Subcommands: gen-coeffs writes (idempotently) the binary coefficient cache
for the configured form; run executes one named experiment and emits a
deterministic JSON or CSV report; calibrate sweeps reference scales and
records measured constants with provenance.

Exit codes: 0 success, 2 assertion failure under --assert, 64 usage error,
65 capacity, cache, calibration, or file i/o error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cache as cachemod
from .calibration import load_calibration
from .coeffs import (
    FormSpec,
    TAU_SERIES_LIMIT,
    cm_prime_table,
    delta_prime_table,
    delta_prime_table_float,
    satotate_sample,
    vanishing_model,
)
from .errors import CacheError, CalibrationError, CapacityError
from .multeval import evaluate_window, hecke_extend
from .sieveweights import SieveParams, weights_window, wpp_majorant
from .stats import (
    chowla_correlation,
    cor_proof_check,
    full_sign_report,
    interval_scan,
    moment_report,
    prime_moment_checks,
    satotate_histogram,
    serre_cm_density,
    shifted_convolution,
    variance_short,
)

ENV_CACHE_DIR = "HSGN_CACHE_DIR"

EXPERIMENTS = (
    "sign-stats",
    "sign-changes",
    "chowla",
    "weights",
    "moments",
    "scan",
    "shifted-conv",
    "variance",
    "prime-checks",
    "st-hist",
    "cm-density",
    "cor-check",
)


@dataclass
class ExperimentConfig:
    """Everything a run needs; round-trips through JSON."""

    form: FormSpec
    X: int = 100_000
    delta: float = 0.1
    gamma: Optional[float] = None
    h: float = 50.0
    K: int = 10
    seed: int = 1
    samples: int = 1000
    output: Optional[str] = None
    format: str = "json"
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.X < 10:
            raise ValueError("X must be at least 10")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if self.gamma is not None and not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.h < 1:
            raise ValueError("h must be at least 1")
        if self.K < 1 or self.samples < 1:
            raise ValueError("K and samples must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["form"] = dataclasses.asdict(self.form)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["form"] = FormSpec(**d["form"])
        return cls(**d)


def _jsonify(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonify(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonify(obj), sort_keys=True, separators=(",", ":")) + "\n"


def report_csv(obj) -> str:
    """One header row and one value row; nested values as JSON cells."""
    import csv
    import io

    flat = _jsonify(obj)
    keys = sorted(flat.keys())
    row = []
    for k in keys:
        v = flat[k]
        if isinstance(v, (dict, list)):
            row.append(json.dumps(v, sort_keys=True, separators=(",", ":")))
        else:
            row.append(v)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\r\n")
    w.writerow(keys)
    w.writerow(row)
    return out.getvalue()


class _Parser(argparse.ArgumentParser):
    """argparse that exits 64 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(64)


def _cache_dir(config: ExperimentConfig) -> str:
    d = config.cache_dir or os.environ.get(ENV_CACHE_DIR)
    if not d:
        d = os.path.join(os.path.expanduser("~"), ".cache", "hsgn")
    os.makedirs(d, exist_ok=True)
    return d


def _cache_name(form: FormSpec, limit: int) -> str:
    bits = [form.kind.lower(), f"w{form.weight}", f"L{limit}"]
    if form.kind in ("SatoTateSynthetic", "VanishingModel"):
        bits.insert(2, f"s{form.seed}")
    if form.kind == "VanishingModel":
        bits.insert(3, f"v{form.vanishing_density:g}")
    return "_".join(bits) + ".hsgn"


def build_table(form: FormSpec, limit: int):
    """Build the prime table for a form, choosing the exact path when it fits."""
    if form.kind == "Delta":
        if limit <= TAU_SERIES_LIMIT:
            return delta_prime_table(limit)
        return delta_prime_table_float(limit)
    if form.kind == "CMCurve":
        return cm_prime_table(limit)
    if form.kind == "SatoTateSynthetic":
        return satotate_sample(form.seed, limit)
    if form.kind == "VanishingModel":
        base = satotate_sample(form.seed, limit)
        return vanishing_model(base, f"random:{form.vanishing_density}")
    raise ValueError(f"unknown form kind {form.kind}")


def load_or_build_table(config: ExperimentConfig, limit: int):
    path = os.path.join(_cache_dir(config), _cache_name(config.form, limit))
    if cachemod.probe(path, config.form, limit):
        try:
            table = cachemod.read_table(path)
            if config.form.kind in ("SatoTateSynthetic", "VanishingModel"):
                # Seed is not part of the header; the name carries it.
                table.form = config.form
            return table
        except CacheError:
            pass
    table = build_table(config.form, limit)
    cachemod.write_table(path, table)
    return table


def _params(config: ExperimentConfig) -> SieveParams:
    return SieveParams(X=config.X, delta=config.delta, gamma=config.gamma)


def _table_limit(experiment: str, config: ExperimentConfig) -> int:
    if experiment in ("scan", "moments", "variance", "weights"):
        return 2 * config.X + max(4200, int(8 * config.h))
    if experiment == "shifted-conv":
        return 2 * config.X
    return config.X


def run_experiment(experiment: str, config: ExperimentConfig):
    """Execute one experiment; returns (report dict, assertion list).

    Assertions are (label, passed) pairs evaluated against calibrated or
    pinned thresholds; they only matter under --assert.
    """
    calib = load_calibration()
    table = load_or_build_table(config, _table_limit(experiment, config))
    spec = hecke_extend(table)
    X = config.X
    checks = []

    if experiment in ("sign-stats", "sign-changes", "chowla"):
        win = evaluate_window(spec, 1, X + 1)
        rep = full_sign_report(win)
        if experiment == "sign-stats":
            if config.form.kind == "Delta":
                checks.append(("no vanishing values", rep.n_zero == 0))
            if rep.n_neg:
                ratio = rep.n_pos / rep.n_neg
                checks.append(("sign balance within 10 percent", 0.9 <= ratio <= 1.1))
        elif experiment == "sign-changes":
            floor = 0.1 if config.form.kind == "Delta" else 0.05
            checks.append(
                (f"sign-change density >= {floor}", rep.sign_changes >= floor * X)
            )
        else:
            band = float(calib.get("chowla_band", 0.5))
            checks.append(
                (f"|chowla sum| <= {band} X", abs(rep.chowla_sum) <= band * X)
            )
        return rep, checks

    if experiment == "weights":
        params = _params(config)
        lo, hi = X, X + min(X, 100_000)
        ww = weights_window(params, spec, lo, hi)
        win = evaluate_window(spec, lo, hi)
        support_ok = bool(np.all(win.signs[ww.w > 0] != 0))
        rep = {
            "lo": lo,
            "hi": hi,
            "w_mean": float(ww.w.mean()),
            "w_prime_mean": float(ww.w_prime.mean()),
            "w_min": float(ww.w.min()),
            "frac_w_positive": float((ww.w > 0).mean()),
            "w_nonnegative": bool(ww.w.min() >= 0.0),
            "w_dominates_w_prime": bool(np.all(ww.w >= ww.w_prime)),
            "w_supported_on_nonzero": support_ok,
        }
        checks += [
            ("w nonnegative", rep["w_nonnegative"]),
            ("w >= w'", rep["w_dominates_w_prime"]),
            ("w > 0 only on nonzero eigenvalues", rep["w_supported_on_nonzero"]),
        ]
        if hi - lo <= 1_000_000:
            diag = wpp_majorant(params, spec, lo, hi)
            rep["sandwich_checked"] = True
            rep["r0"] = diag.r0
            checks.append(("sandwich w <= w' + w''", True))
        return rep, checks

    if experiment == "moments":
        rep = moment_report(_params(config), spec)
        floor = float(calib.get("m1_floor", 0.02))
        checks.append((f"m1 >= {floor}", rep.m1_wprime >= floor))
        return rep, checks

    if experiment == "scan":
        rep = interval_scan(
            _params(config), spec, config.h, config.K, config.samples, config.seed
        )
        checks += [
            ("frac_S1_small >= 0.99", rep.frac_S1_small >= 0.99),
            ("some windows certified", rep.frac_certified_sign_change > 0.0),
        ]
        return rep, checks

    if experiment == "shifted-conv":
        reports = [shifted_convolution(spec, 1, 1, 1, 1, 0, X)]
        for h in (1, 2, 3):
            reports.append(shifted_convolution(spec, 1, 1, 1, 1, h, X))
        diag = reports[0].value
        checks.append(("diagonal within [0.1 X, 10 X]", 0.1 * X <= diag <= 10 * X))
        for r in reports[1:]:
            checks.append(
                (f"off-diagonal h={r.h} below X^0.9", abs(r.value) <= X**0.9)
            )
        return {"battery": reports}, checks

    if experiment == "variance":
        params = _params(config)
        v1 = variance_short(params, config.h, spec)
        v2 = variance_short(params, 2 * config.h, spec)
        ratio = v2 / v1 if v1 else float("inf")
        rep = {"h": config.h, "var_over_h": v1, "var_over_2h": v2, "ratio": ratio}
        checks.append(("doubling h moves variance/h by < 4x", 0.25 <= ratio <= 4.0))
        return rep, checks

    if experiment == "prime-checks":
        y = max(10, int(math.isqrt(X)))
        rep = prime_moment_checks(table, y)
        checks += [
            ("eigenvalue mass at [y, 2y]", rep.large_ok),
            ("quartic minorant below threshold", rep.grid_ok),
        ]
        return rep, checks

    if experiment == "st-hist":
        rep = satotate_histogram(table, X, bins=40)
        checks += [
            ("histogram close to semicircle", rep.discrepancy <= 0.03),
            ("negative fraction near half", 0.45 <= rep.neg_fraction <= 0.55),
        ]
        return rep, checks

    if experiment == "cm-density":
        rep = serre_cm_density(table, X)
        checks.append(("within 1.5 of half loglog", abs(rep.diff) <= 1.5))
        return rep, checks

    if experiment == "cor-check":
        win = evaluate_window(spec, 1, X + 1)
        rep = cor_proof_check(win)
        checks += [
            ("dyadic pattern found", rep.found),
            ("doubling identities hold", rep.identities_ok),
            ("three-pair disjunction", rep.frac_disjunction == 1.0),
        ]
        return rep, checks

    raise ValueError(f"unknown experiment {experiment!r}")


def _emit(experiment: str, config: ExperimentConfig, rep) -> str:
    cfg = config.to_dict()
    for volatile in ("output", "format", "cache_dir"):
        cfg.pop(volatile, None)
    payload = {
        "schema": 1,
        "experiment": experiment,
        "config": cfg,
        "report": _jsonify(rep),
    }
    if config.format == "csv":
        flat = dict(payload["report"]) if isinstance(payload["report"], dict) else {
            "report": payload["report"]
        }
        flat["experiment"] = experiment
        return report_csv(flat)
    return canonical_json(payload)


def cmd_gen_coeffs(config: ExperimentConfig) -> int:
    path = os.path.join(_cache_dir(config), _cache_name(config.form, config.X))
    if cachemod.probe(path, config.form, config.X):
        print(f"up to date: {path}")
        return 0
    table = build_table(config.form, config.X)
    cachemod.write_table(path, table)
    print(f"wrote {path} ({table.primes.size} primes)")
    return 0


def cmd_run(experiment: str, config: ExperimentConfig, do_assert: bool) -> int:
    rep, checks = run_experiment(experiment, config)
    text = _emit(experiment, config, rep)
    if config.output:
        with open(config.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {config.output}")
    else:
        sys.stdout.write(text)
    if do_assert:
        failed = [label for label, ok in checks if not ok]
        for label, ok in checks:
            print(f"[{'ok' if ok else 'FAIL'}] {label}", file=sys.stderr)
        if failed:
            return 2
    return 0


def cmd_calibrate(config: ExperimentConfig) -> int:
    """Sweep reference scales for the configured form and record constants."""
    sweep = [10_000, 100_000, 1_000_000]
    rows = []
    for x in sweep:
        cfg = dataclasses.replace(config, X=x)
        params = _params(cfg)
        table = load_or_build_table(cfg, 2 * x + max(4200, int(8 * cfg.h)))
        spec = hecke_extend(table)
        win = evaluate_window(spec, 1, x + 1)
        scan = interval_scan(params, spec, cfg.h, cfg.K, cfg.samples, cfg.seed)
        mom = moment_report(params, spec)
        v1 = variance_short(params, 10.0, spec)
        v2 = variance_short(params, 20.0, spec)
        rows.append(
            {
                "X": x,
                "chowla_over_X": chowla_correlation(win) / x,
                "empirical_C": scan.empirical_C,
                "empirical_c": scan.empirical_c,
                "m1_wprime": mom.m1_wprime,
                "m2_wprime": mom.m2_wprime,
                "m2_w": mom.m2_w,
                "var_over_h_10": v1,
                "var_over_h_20": v2,
            }
        )
        print(f"calibrated X={x}", file=sys.stderr)
    out = {
        "schema": 1,
        "provenance": {
            "command": "hsgn calibrate",
            "generated": "2026-08-17",
            "form": config.form.kind,
            "X_sweep": sweep,
            "seed": config.seed,
            "h": config.h,
            "K": config.K,
            "samples": config.samples,
        },
        "rows": rows,
        "scan_C": 1.1 * max(r["empirical_C"] for r in rows),
        "scan_c": 0.9 * min(r["empirical_c"] for r in rows),
        "chowla_band": min(0.5, 2.0 * max(abs(r["chowla_over_X"]) for r in rows)),
        "m1_floor": 0.5 * min(r["m1_wprime"] for r in rows),
        "m1_band": [
            min(r["m1_wprime"] for r in rows),
            max(r["m1_wprime"] for r in rows),
        ],
        "variance_ceiling": 2.0 * max(max(r["var_over_h_10"], r["var_over_h_20"]) for r in rows),
    }
    path = config.output or os.path.join(_cache_dir(config), "calibration.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_jsonify(out), sort_keys=True, indent=2) + "\n")
    print(f"wrote {path}")
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--form", default="Delta", choices=[k for k in ("Delta", "CMCurve", "SatoTateSynthetic", "VanishingModel")])
    p.add_argument("--X", type=int, default=100_000)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--h", type=float, default=50.0)
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--vanishing", type=float, default=0.25, help="vanishing density for VanishingModel")
    p.add_argument("--out", default=None)
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.add_argument("--cache-dir", default=None)


def _config_from_args(args) -> ExperimentConfig:
    form = FormSpec(
        args.form,
        seed=args.seed,
        vanishing_density=args.vanishing if args.form == "VanishingModel" else 0.0,
    )
    try:
        return ExperimentConfig(
            form=form,
            X=args.X,
            delta=args.delta,
            gamma=args.gamma,
            h=args.h,
            K=args.K,
            seed=args.seed,
            samples=args.samples,
            output=args.out,
            format=args.format,
            cache_dir=args.cache_dir,
        )
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        raise SystemExit(64) from exc


def main(argv=None) -> int:
    parser = _Parser(prog="hsgn", description="eigenvalue sign experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-coeffs", parents=[], help="write the coefficient cache")
    _add_common(p_gen)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("experiment", choices=EXPERIMENTS)
    p_run.add_argument("--assert", dest="do_assert", action="store_true")
    _add_common(p_run)

    p_cal = sub.add_parser("calibrate", help="sweep reference scales")
    _add_common(p_cal)

    args = parser.parse_args(argv)
    config = _config_from_args(args)
    try:
        if args.command == "gen-coeffs":
            return cmd_gen_coeffs(config)
        if args.command == "run":
            return cmd_run(args.experiment, config, args.do_assert)
        if args.command == "calibrate":
            return cmd_calibrate(config)
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return 65
    except CacheError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return 65
    except CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return 65
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 65
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
