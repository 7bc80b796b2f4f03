"""Command-line interface: run, sweep, verify, drift, plot."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import exact_drift
from .controllers import KINDS, ControllerSpec
from .core import ConfigError, EAConfig
from .engine import run_ea, write_trajectory_csv
from .harness import (
    CLAIMS,
    PLOT_KINDS,
    VerifyRow,
    emit_csv,
    emit_plot,
    parse_summary_csv,
    parse_trajectory_csv,
    run_sweep,
    spec_from_json,
    verify_suite,
)


def _parse_controller(args) -> ControllerSpec:
    kind = args.controller
    rate = None
    if kind.startswith("static:"):
        rate = float(kind.split(":", 1)[1])
        kind = "static"
    if kind not in KINDS:
        raise ConfigError(f"unknown controller {args.controller!r}; expected one of {KINDS} or static:<r>")
    if kind == "two-rate" and args.subpops == 3:
        kind = "three-rate"
    if kind in ("two-rate", "three-rate"):
        return ControllerSpec(kind=kind, factor=args.factor, random_steps=args.random_steps)
    return ControllerSpec(kind=kind, rate=rate)


def _cmd_run(args) -> int:
    spec = _parse_controller(args)
    config = EAConfig(n=args.n, lam=args.lam, budget=args.budget, initial_rate=args.initial_rate)
    record = run_ea(config, spec, seed=args.seed, trajectory=args.trajectory is not None)
    if args.trajectory is not None:
        write_trajectory_csv(record, args.trajectory)
    print(
        json.dumps(
            {
                "controller": spec.label(),
                "n": config.n,
                "lambda": config.lam,
                "seed": record.seed,
                "generations": record.generations,
                "evaluations": record.evaluations,
                "hit_optimum": record.hit_optimum,
            }
        )
    )
    return 0


def _cmd_sweep(args) -> int:
    spec = spec_from_json(Path(args.config).read_text(encoding="utf-8"))
    if args.reps is not None:
        import dataclasses

        spec = dataclasses.replace(spec, replications=args.reps)
    out = Path(args.out)
    result = run_sweep(spec, workers=args.workers, trajectory_dir=args.trajectory_dir)
    emit_csv(result.rows, out, schema="runs")
    summary_path = out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))
    emit_csv(result.summaries, summary_path, schema="summary")
    print(f"wrote {len(result.rows)} runs to {out} and {len(result.summaries)} summaries to {summary_path}")
    return 0


def _print_verify_row(row: VerifyRow) -> None:
    print(
        f"{row.claim}: estimate={row.estimate:.6g} ci=[{row.ci_low:.6g}, {row.ci_high:.6g}] "
        f"threshold={row.threshold:.6g} preconditions_ok={str(row.preconditions_ok).lower()} "
        f"pass={str(row.passed).lower()} ({row.params})"
    )


def _cmd_verify(args) -> int:
    names = tuple(CLAIMS) if "all" in args.claim else tuple(args.claim)
    rows = verify_suite(names, samples=args.samples, seed=args.seed)
    for row in rows:
        _print_verify_row(row)
    if args.out is not None:
        emit_csv(rows, args.out, schema="verify")
    strict_failures = [row for row in rows if row.preconditions_ok and not row.passed]
    return 1 if strict_failures else 0


def _parse_grid(text: str | None, fallback: list[float]) -> list[float]:
    if text is None:
        return fallback
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_drift(args) -> int:
    log_lam = math.log(args.lam)
    ks = _parse_grid(args.k, list(np.unique(np.linspace(args.n // args.lam, int(args.n / log_lam), 5).astype(int))))
    rs = _parse_grid(args.r, list(np.linspace(2.0, log_lam, 4)))
    lines = ["n,lambda,k,r,drift,truncation_ok"]
    for k in ks:
        for r in rs:
            estimate = exact_drift(args.n, int(k), float(r), args.lam)
            lines.append(
                f"{args.n},{args.lam},{int(k)},{float(r)!r},{estimate.value!r},"
                f"{'true' if estimate.truncation_ok else 'false'}"
            )
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_plot(args) -> int:
    series: dict[str, list[tuple[float, float]]] = {}
    if args.kind == "runtime-vs-lambda":
        summaries = parse_summary_csv(args.data)
        for row in summaries:
            key = row.controller if len({s.n for s in summaries}) == 1 else f"{row.controller} n={row.n}"
            series.setdefault(key, []).append((float(row.lam), row.mean_generations))
            if args.iqr:
                series.setdefault(key + " q1", []).append((float(row.lam), row.q1))
                series.setdefault(key + " q3", []).append((float(row.lam), row.q3))
        for points in series.values():
            points.sort()
    else:
        trajectory = parse_trajectory_csv(args.data)
        series["rate"] = [(float(k), r) for _, k, r in trajectory]
    emit_plot(series, args.kind, args.out, log_y=args.log_y)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tworate",
        description="Two-rate self-adjusting (1+lambda) EA on OneMax: runs, sweeps, verifiers, plots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single run; prints the run record as JSON")
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--lambda", dest="lam", type=int, required=True)
    run.add_argument("--controller", default="two-rate", help=f"one of {', '.join(KINDS)} or static:<r>")
    run.add_argument("--factor", type=float, default=2.0, help="rate update factor F")
    run.add_argument("--random-steps", action=argparse.BooleanOptionalAction, default=True)
    run.add_argument("--subpops", type=int, choices=(2, 3), default=2)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--budget", type=int, default=None)
    run.add_argument("--initial-rate", type=float, default=None)
    run.add_argument("--trajectory", metavar="PATH", default=None, help="write t,k,r rows to PATH")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run an experiment spec from a JSON config")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--reps", type=int, default=None, help="override the spec's replications")
    sweep.add_argument("--trajectory-dir", default=None)
    sweep.set_defaults(func=_cmd_sweep)

    verify = sub.add_parser("verify", help="run lemma-level verifier claims")
    verify.add_argument("--claim", action="append", default=None, help=f"one of {', '.join(CLAIMS)} or all; repeatable")
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", default=None, help="also write the report as CSV")
    verify.set_defaults(func=_cmd_verify)

    drift = sub.add_parser("drift", help="exact drift table over a (k, r) grid")
    drift.add_argument("--n", type=int, required=True)
    drift.add_argument("--lambda", dest="lam", type=int, required=True)
    drift.add_argument("--k", default=None, help="comma-separated fitness distances")
    drift.add_argument("--r", default=None, help="comma-separated rates")
    drift.add_argument("--out", default=None)
    drift.set_defaults(func=_cmd_drift)

    plot = sub.add_parser("plot", help="render a CSV to SVG plus a companion data file")
    plot.add_argument("--kind", choices=PLOT_KINDS, required=True)
    plot.add_argument("--data", required=True, help="summary CSV or trajectory CSV")
    plot.add_argument("--out", required=True)
    plot.add_argument("--log-y", action="store_true")
    plot.add_argument("--iqr", action="store_true", help="add q1/q3 series to runtime plots")
    plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and not args.claim:
        args.claim = ["all"]
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
