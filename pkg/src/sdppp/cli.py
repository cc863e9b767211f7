"""Command-line surface: experiments, CSV/JSON emission, exit codes.

Exit codes: 0 complete/pass, 2 statistical fail, 3 inconclusive
(truncation-bias budget exceeded), 4 configuration error.  Reports embed
the fully resolved configuration and the master seed; the same
(config, seed) pair produces byte-identical reports (modulo the timestamp
field) whatever --threads is.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .battery import default_battery
from .branching import brw_sampler, recommend_floor
from .config import (
    decoration_from_obj,
    law_from_obj,
    law_to_obj,
    load_json_arg,
    parse_extended_float,
    shift_from_spec,
    target_from_spec,
)
from .errors import ConfigError, NoCriticalRootError, PopulationCapError
from .martingale import derivative_martingale, sample_S
from .poisson import max_cdf_curve, normalize_decoration, sdppp_sampler
from .reproduction import classify, solve_critical_alpha
from .streams import replicate_map, replicate_stream
from .verify import count_stabilization, extract_decoration, smoothing_iterate, verify_fixed_point

EXIT_OK = 0
EXIT_STAT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_CONFIG = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="sdppp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=20260809)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--config", default=None,
                        help="JSON file or inline object supplying defaults")
    common.add_argument("--report", default=None, help="report JSON path")
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = sub.add_parser("classify", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="auto")
    parsers["classify"] = p

    p = sub.add_parser("simulate-brw", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--generations", type=int, default=8)
    p.add_argument("--barrier", default="-inf")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--out", default=None, help="CSV path (default in out-dir)")
    p.add_argument("--report-threshold", default="-inf",
                   help="only atoms above this level are written")
    parsers["simulate-brw"] = p

    p = sub.add_parser("sample-shift", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--case", default="auto",
                   choices=["auto", "regular", "boundary"])
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--out", default=None)
    parsers["sample-shift"] = p

    p = sub.add_parser("sample-sdppp", parents=[common])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--shift", default="const:1.0",
                   help="const:<v> or martingale (uses --law)")
    p.add_argument("--law", default=None)
    p.add_argument("--case", default="auto")
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--decoration", default='{"mixture":[{"p":1.0,"atoms":[0.0]}]}')
    p.add_argument("--floor", type=float, default=-5.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--out", default=None)
    parsers["sample-sdppp"] = p

    p = sub.add_parser("verify-fixed-point", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--target", default="cox",
                   help="cox | sdppp:<decoration json> | file:<samples.csv>")
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--significance", type=float, default=1e-3)
    p.add_argument("--miss-budget", type=float, default=1e-4)
    parsers["verify-fixed-point"] = p

    p = sub.add_parser("extract-decoration", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--target", default="cox")
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--levels", default="2,3,4,5")
    p.add_argument("--window", type=float, default=None,
                   help="recentred window width (default 5/alpha)")
    p.add_argument("--reps", type=int, default=20000)
    p.add_argument("--out", default=None)
    parsers["extract-decoration"] = p

    p = sub.add_parser("smoothing", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--t-min", type=float, default=1e-4)
    p.add_argument("--t-max", type=float, default=1e4)
    p.add_argument("--grid-points", type=int, default=41)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--mc-reps", type=int, default=10000)
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--fit-tolerance", type=float, default=0.03)
    parsers["smoothing"] = p

    p = sub.add_parser("max-law", parents=[common])
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--decoration", default='{"mixture":[{"p":1.0,"atoms":[0.0]}]}')
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--oracle-reps", type=int, default=30000)
    p.add_argument("--tolerance", type=float, default=0.02)
    parsers["max-law"] = p
    return parser, parsers


def _apply_config(args, subparser) -> None:
    if not args.config:
        return
    overrides = load_json_arg(args.config)
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, dest) == subparser.get_default(dest):
            setattr(args, dest, value)


def _resolve_alpha(args, law):
    if str(args.alpha) == "auto":
        return solve_critical_alpha(law)
    try:
        alpha = float(args.alpha)
    except ValueError as exc:
        raise ConfigError(f"bad alpha {args.alpha!r}") from exc
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    return alpha


def _resolved_config(args) -> dict:
    skip = {"command", "config", "report", "out_dir"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = value
    return out


def _write_report(args, payload: dict) -> str:
    payload = dict(payload)
    payload.setdefault("command", args.command)
    payload.setdefault("config", _resolved_config(args))
    payload.setdefault("seeds", {"master": args.seed})
    payload["threads"] = args.threads
    payload["timestamp"] = time.time()
    path = args.report or os.path.join(args.out_dir, f"{args.command}-report.json")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(value):
    if dataclasses.is_dataclass(value):
        return dataclasses.asdict(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, float) and math.isinf(value):
        return "-inf" if value < 0 else "inf"
    raise TypeError(f"not JSON-serializable: {type(value)}")


def _out_path(args, default_name: str) -> str:
    path = args.out or os.path.join(args.out_dir, default_name)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return path


def _cmd_classify(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    try:
        alpha = _resolve_alpha(args, law)
    except NoCriticalRootError as exc:
        print(f"no critical exponent: {exc}", file=sys.stderr)
        return EXIT_STAT_FAIL
    report = classify(law, alpha)
    _write_report(args, {"results": dataclasses.asdict(report), "verdict": "complete"})
    print(
        f"case={report.case} alpha={report.alpha:.6f} "
        f"first_moment={report.first_moment:.6g} a1={report.a1_ok} "
        f"a3={report.a3_ok} xlogx={report.xlogx_moments_ok}"
    )
    return EXIT_OK


def _cmd_simulate_brw(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    barrier = parse_extended_float(args.barrier)
    threshold = parse_extended_float(args.report_threshold)
    sampler = brw_sampler(law, args.generations, barrier)
    path = _out_path(args, "brw-samples.csv")

    def one(rng):
        return sampler.draw(rng)

    draws = replicate_map(one, args.reps, args.seed, args.threads)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "floor", "atoms"])
        for i, m in enumerate(draws):
            atoms = [a for a in m.atoms if a > threshold]
            writer.writerow([i, repr(m.floor)] + [repr(float(a)) for a in atoms])
    sizes = [len(m) for m in draws]
    _write_report(args, {
        "results": {
            "mean_population": float(np.mean(sizes)),
            "max_population": int(np.max(sizes)),
            "csv": path,
        },
        "verdict": "complete",
    })
    print(f"wrote {args.reps} replicates to {path}")
    return EXIT_OK


def _cmd_sample_shift(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    alpha = _resolve_alpha(args, law)
    case = args.case
    if case == "auto":
        case = classify(law, alpha).case
    if case not in ("regular", "boundary"):
        raise ConfigError(f"no shift construction in case {case!r}")
    shift = sample_S(law, alpha, n=args.generations, case=case)
    path = _out_path(args, "shift-samples.csv")
    if case == "boundary":
        raw = replicate_map(
            lambda r: derivative_martingale(law, alpha, args.generations, r),
            args.reps, args.seed, args.threads,
        )
        values = [max(v, 0.0) for v in raw]
        clamped = [v < 0.0 for v in raw]
    else:
        values = replicate_map(shift.draw, args.reps, args.seed, args.threads)
        clamped = [False] * args.reps
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "value", "clamped"])
        for i, (v, c) in enumerate(zip(values, clamped)):
            writer.writerow([i, repr(float(v)), int(c)])
    _write_report(args, {
        "results": {
            "case": case,
            "alpha": alpha,
            "generations_used": args.generations,
            "mean": float(np.mean(values)),
            "clamp_fraction": float(np.mean(clamped)),
            "csv": path,
        },
        "verdict": "complete",
    })
    print(f"case={case} mean={float(np.mean(values)):.4f} "
          f"clamp_fraction={float(np.mean(clamped)):.4f}")
    return EXIT_OK


def _cmd_sample_sdppp(args) -> int:
    law = law_from_obj(load_json_arg(args.law)) if args.law else None
    shift = shift_from_spec(args.shift, args.alpha, law, args.generations, args.case)
    raw = decoration_from_obj(load_json_arg(args.decoration))
    c, star = normalize_decoration(raw, args.alpha)
    sampler = sdppp_sampler(shift, args.alpha, star, args.floor)
    path = _out_path(args, "sdppp-samples.csv")
    draws = replicate_map(sampler.draw, args.reps, args.seed, args.threads)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["floor", "atoms"])
        for m in draws:
            writer.writerow(m.to_csv_row())
    counts = [len(m) for m in draws]
    _write_report(args, {
        "results": {
            "normalization_constant": c,
            "mean_atom_count": float(np.mean(counts)),
            "empty_fraction": float(np.mean([m.is_null for m in draws])),
            "csv": path,
        },
        "verdict": "complete",
    })
    print(f"wrote {args.reps} SDPPP draws to {path} (c={c:.4f})")
    return EXIT_OK


def _verdict_exit(verdict: str) -> int:
    return {"pass": EXIT_OK, "complete": EXIT_OK,
            "fail": EXIT_STAT_FAIL}.get(verdict, EXIT_INCONCLUSIVE)


def _cmd_verify(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    alpha = _resolve_alpha(args, law)
    battery = default_battery(1.0 / alpha)
    min_edge = min(phi.a for phi in battery)
    floor = recommend_floor(min_edge, law, 1, args.miss_budget)
    target = target_from_spec(
        args.target, law, alpha, floor, args.generations
    )
    rng = replicate_stream(args.seed, 0)
    report = verify_fixed_point(
        law, target, battery, args.reps, args.significance, rng,
        threads=args.threads, miss_budget=args.miss_budget,
    )
    payload = {
        "tests": [dataclasses.asdict(t) for t in report.tests],
        "verdict": report.verdict,
        "bias_budget": report.bias_budget,
        "results": {
            "achieved_miss": report.achieved_miss,
            "truncation_violations": report.truncation_violations,
            "n_tests": report.n_tests,
            "floor": floor,
            "target": target.description,
        },
    }
    _write_report(args, payload)
    print(f"verdict={report.verdict} "
          f"({sum(t.passed for t in report.tests)}/{len(report.tests)} tests pass)")
    return _verdict_exit(report.verdict)


def _cmd_extract_decoration(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    alpha = _resolve_alpha(args, law)
    try:
        levels = [float(v) for v in str(args.levels).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad levels {args.levels!r}") from exc
    if not levels:
        raise ConfigError("need at least one level")
    window = args.window if args.window is not None else 5.0 / alpha
    floor = min(levels) - window - 1.0
    target = target_from_spec(args.target, law, alpha, floor, args.generations)
    rng = replicate_stream(args.seed, 0)
    extraction = extract_decoration(
        target, levels, window, args.reps, rng, threads=args.threads
    )
    counts = count_stabilization(
        target, levels, args.reps, replicate_stream(args.seed, 1),
        threads=args.threads,
    )
    path = _out_path(args, "decoration-levels.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "z", "n_conditioned", "second_atom_prob", "gap_median",
            "count_hist",
        ])
        for lv in extraction.levels:
            writer.writerow([
                lv.z, lv.n_conditioned, lv.second_atom_prob,
                float(np.median(lv.gaps)) if lv.gaps else "",
                ";".join(f"{v:.6g}" for v in lv.count_histogram),
            ])
    _write_report(args, {
        "results": {
            "window": window,
            "levels": [
                {
                    "z": lv.z,
                    "n_conditioned": lv.n_conditioned,
                    "second_atom_prob": lv.second_atom_prob,
                }
                for lv in extraction.levels
            ],
            "dropped_levels": list(extraction.dropped_levels),
            "count_tv_sequence": list(extraction.count_tv_sequence),
            "gap_ks_sequence": list(extraction.gap_ks_sequence),
            "conditional_count_tv_sequence": list(counts.tv_sequence),
            "csv": path,
        },
        "verdict": "complete",
    })
    print(f"extracted {len(extraction.levels)} levels "
          f"({len(extraction.dropped_levels)} dropped); wrote {path}")
    return EXIT_OK


def _cmd_smoothing(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    alpha = _resolve_alpha(args, law)
    t = np.geomspace(args.t_min, args.t_max, args.grid_points)
    f0 = np.exp(-(t ** alpha))
    rng = replicate_stream(args.seed, 0)
    shift = sample_S(law, alpha, n=args.generations)
    result = smoothing_iterate(
        law, alpha, t, f0, args.iterations, args.mc_reps, rng,
        shift=shift, threads=args.threads,
    )
    decreasing = all(
        result.residuals[i + 1] <= result.residuals[i] + 1e-12
        for i in range(len(result.residuals) - 1)
    )
    ok = decreasing and result.fit_sup_distance < args.fit_tolerance
    verdict = "pass" if ok else "fail"
    _write_report(args, {
        "results": {
            "residuals": list(result.residuals),
            "fit_h": result.fit_h,
            "fit_sup_distance": result.fit_sup_distance,
            "residuals_decreasing": decreasing,
        },
        "verdict": verdict,
    })
    print(f"verdict={verdict} fit_sup_distance={result.fit_sup_distance:.4f} "
          f"(tolerance {args.fit_tolerance:g})")
    return _verdict_exit(verdict)


def _cmd_max_law(args) -> int:
    law = law_from_obj(load_json_arg(args.law))
    alpha = _resolve_alpha(args, law)
    raw = decoration_from_obj(load_json_arg(args.decoration))
    c, star = normalize_decoration(raw, alpha)
    floor = args.floor if args.floor is not None else -5.0 / alpha
    shift = sample_S(law, alpha, n=args.generations)
    sampler = sdppp_sampler(shift, alpha, star, floor)
    maxes = np.array(replicate_map(
        lambda r: sampler.draw(r).max_atom(), args.reps, args.seed, args.threads
    ))
    finite = maxes[np.isfinite(maxes)]
    if finite.size == 0:
        raise ConfigError("all draws were empty; lower the floor")
    lo = float(np.quantile(finite, 0.005))
    hi = float(np.quantile(finite, 0.995))
    xs = np.linspace(lo, hi, 25)
    empirical = np.array([(maxes <= x).mean() for x in xs])
    rng = replicate_stream(args.seed, 1)
    analytic, _ = max_cdf_curve(
        c / alpha, shift, alpha, xs, args.oracle_reps, rng, args.threads
    )
    sup = float(np.max(np.abs(empirical - analytic)))
    verdict = "pass" if sup < args.tolerance else "fail"
    _write_report(args, {
        "results": {
            "sup_distance": sup,
            "grid": xs.tolist(),
            "empirical": empirical.tolist(),
            "semi_analytic": analytic.tolist(),
            "max_law_constant": c / alpha,
        },
        "verdict": verdict,
    })
    print(f"verdict={verdict} sup_distance={sup:.4f} (tolerance {args.tolerance:g})")
    return _verdict_exit(verdict)


_COMMANDS = {
    "classify": _cmd_classify,
    "simulate-brw": _cmd_simulate_brw,
    "sample-shift": _cmd_sample_shift,
    "sample-sdppp": _cmd_sample_sdppp,
    "verify-fixed-point": _cmd_verify,
    "extract-decoration": _cmd_extract_decoration,
    "smoothing": _cmd_smoothing,
    "max-law": _cmd_max_law,
}


def main(argv=None) -> int:
    parser, parsers = _build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args, parsers[args.command])
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PopulationCapError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
