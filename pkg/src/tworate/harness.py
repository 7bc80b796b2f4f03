"""Experiment sweeps, result persistence, plots, and the verifier registry.

Reproducibility contract: the seed of run (cell, replication) is derived from
the master seed with numpy's SeedSequence spawn mechanism,
``SeedSequence(entropy=master_seed, spawn_key=(cell, replication))``, a
stateless mixing function. Rows are emitted in (cell, replication) order, so
serial and parallel executions of the same spec produce byte-identical CSV.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    exact_drift,
    mc_all_worse,
    mc_rate_halving,
    mc_winner_origin,
    region_bounds,
    summarize,
)
from .controllers import (
    ControllerSpec,
    GenerationOutcome,
    enumerate_update_outcomes,
    make_controller,
    two_rate_state,
)
from .core import ConfigError, EAConfig
from .engine import RunRecord, run_ea, write_trajectory_csv


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep: the cross product of problem sizes, lambdas, and controllers.

    Cell index enumerates that product in (n, lambda, controller) order; the
    JSON config file mirrors these fields one for one.
    """

    ns: tuple[int, ...]
    lambdas: tuple[int, ...]
    controllers: tuple[ControllerSpec, ...]
    replications: int
    master_seed: int
    budget: int | None = None
    trajectory: bool = False

    def cells(self) -> list[tuple[int, int, int, ControllerSpec]]:
        out = []
        index = 0
        for n in self.ns:
            for lam in self.lambdas:
                for ctl in self.controllers:
                    out.append((index, n, lam, ctl))
                    index += 1
        return out

    def validate(self) -> None:
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not self.ns or not self.lambdas or not self.controllers:
            raise ConfigError("spec needs at least one n, one lambda, and one controller")
        for _, n, lam, ctl in self.cells():
            config = EAConfig(n=n, lam=lam, budget=self.budget)
            make_controller(ctl, config)  # raises on any invalid cell


def spec_from_json(text: str) -> ExperimentSpec:
    raw = json.loads(text)
    controllers = tuple(ControllerSpec(**ctl) for ctl in raw["controllers"])
    return ExperimentSpec(
        ns=tuple(int(n) for n in raw["ns"]),
        lambdas=tuple(int(v) for v in raw["lambdas"]),
        controllers=controllers,
        replications=int(raw["replications"]),
        master_seed=int(raw["master_seed"]),
        budget=None if raw.get("budget") is None else int(raw["budget"]),
        trajectory=bool(raw.get("trajectory", False)),
    )


def spec_to_json(spec: ExperimentSpec) -> str:
    raw = {
        "ns": list(spec.ns),
        "lambdas": list(spec.lambdas),
        "controllers": [
            {key: val for key, val in dataclasses.asdict(ctl).items() if val is not None}
            for ctl in spec.controllers
        ],
        "replications": spec.replications,
        "master_seed": spec.master_seed,
        "budget": spec.budget,
        "trajectory": spec.trajectory,
    }
    return json.dumps(raw, indent=2)


def derive_run_seed(master_seed: int, cell: int, replication: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(cell, replication))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ResultRow:
    controller: str
    n: int
    lam: int
    factor: float | None
    random_steps: bool | None
    subpops: int
    seed: int
    generations: int
    evaluations: int
    hit_optimum: bool


@dataclass(frozen=True)
class SummaryRow:
    controller: str
    n: int
    lam: int
    factor: float | None
    runs: int
    mean_generations: float
    q1: float
    median: float
    q3: float
    stddev: float


@dataclass(frozen=True)
class VerifyRow:
    claim: str
    params: str
    preconditions_ok: bool
    estimate: float
    ci_low: float
    ci_high: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class _RunTask:
    cell: int
    replication: int
    n: int
    lam: int
    controller: ControllerSpec
    budget: int | None
    trajectory: bool
    seed: int


def _execute_task(task: _RunTask) -> RunRecord:
    config = EAConfig(n=task.n, lam=task.lam, budget=task.budget)
    return run_ea(config, task.controller, seed=task.seed, trajectory=task.trajectory)


def _row_from(task: _RunTask, record: RunRecord) -> ResultRow:
    ctl = task.controller
    adjusting = ctl.kind in ("two-rate", "three-rate")
    return ResultRow(
        controller=ctl.label(),
        n=task.n,
        lam=task.lam,
        factor=ctl.factor if adjusting else None,
        random_steps=ctl.random_steps if adjusting else None,
        subpops=ctl.subpopulations,
        seed=task.seed,
        generations=record.generations,
        evaluations=record.evaluations,
        hit_optimum=record.hit_optimum,
    )


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[ResultRow, ...]
    summaries: tuple[SummaryRow, ...]


def run_sweep(
    spec: ExperimentSpec, workers: int = 1, trajectory_dir: str | os.PathLike | None = None
) -> SweepResult:
    """Execute every (cell, replication) run; deterministic given the spec.

    All cells are validated before the first run starts. With ``workers > 1``
    runs execute in a process pool; output order and bytes are identical to
    serial execution because rows are assembled in task order and every run
    owns a seed derived from (master_seed, cell, replication).
    """
    spec.validate()
    tasks = [
        _RunTask(
            cell=cell,
            replication=rep,
            n=n,
            lam=lam,
            controller=ctl,
            budget=spec.budget,
            trajectory=spec.trajectory,
            seed=derive_run_seed(spec.master_seed, cell, rep),
        )
        for cell, n, lam, ctl in spec.cells()
        for rep in range(spec.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_execute_task, tasks, chunksize=8))
    else:
        records = [_execute_task(task) for task in tasks]

    if trajectory_dir is not None and spec.trajectory:
        directory = Path(trajectory_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for task, record in zip(tasks, records):
            write_trajectory_csv(record, directory / f"traj_c{task.cell:04d}_r{task.replication:04d}.csv")

    rows = tuple(_row_from(task, record) for task, record in zip(tasks, records))
    summaries = []
    per_cell = spec.replications
    for cell, n, lam, ctl in spec.cells():
        cell_rows = rows[cell * per_cell : (cell + 1) * per_cell]
        stats = summarize([row.generations for row in cell_rows])
        adjusting = ctl.kind in ("two-rate", "three-rate")
        summaries.append(
            SummaryRow(
                controller=ctl.label(),
                n=n,
                lam=lam,
                factor=ctl.factor if adjusting else None,
                runs=stats.count,
                mean_generations=stats.mean,
                q1=stats.q1,
                median=stats.median,
                q3=stats.q3,
                stddev=stats.stddev,
            )
        )
    return SweepResult(rows=rows, summaries=tuple(summaries))


_SCHEMAS = {
    "runs": (
        ResultRow,
        ("controller", "n", "lambda", "F", "random_steps", "subpops", "seed", "generations", "evaluations", "hit_optimum"),
    ),
    "summary": (
        SummaryRow,
        ("controller", "n", "lambda", "F", "runs", "mean_generations", "q1", "median", "q3", "stddev"),
    ),
    "verify": (
        VerifyRow,
        ("claim", "params", "preconditions_ok", "estimate", "ci_low", "ci_high", "threshold", "pass"),
    ),
}


def _format_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_write(destination: str | os.PathLike, text: str) -> None:
    destination = Path(destination)
    tmp = destination.with_name(destination.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, destination)


def emit_csv(rows, destination: str | os.PathLike, schema: str | None = None) -> None:
    """Write rows as CSV: documented field order, plain decimals, one header
    line, single-newline terminators. Empty row sets need an explicit schema."""
    rows = list(rows)
    if schema is None:
        if not rows:
            raise ConfigError("cannot infer CSV schema from an empty row set")
        for name, (cls, _) in _SCHEMAS.items():
            if isinstance(rows[0], cls):
                schema = name
                break
        else:
            raise ConfigError(f"no CSV schema for row type {type(rows[0]).__name__}")
    if schema not in _SCHEMAS:
        raise ConfigError(f"unknown CSV schema {schema!r}")
    cls, header = _SCHEMAS[schema]
    lines = [",".join(header)]
    for row in rows:
        if not isinstance(row, cls):
            raise ConfigError(f"row {row!r} does not match schema {schema!r}")
        values = [_format_field(v) for v in dataclasses.astuple(row)]
        for value in values:
            if "," in value or "\n" in value or '"' in value:
                raise ConfigError(f"field value {value!r} would corrupt the CSV")
        lines.append(",".join(values))
    _atomic_write(destination, "\n".join(lines) + "\n")


def _parse_optional_float(text: str) -> float | None:
    return None if text == "" else float(text)


def _parse_optional_bool(text: str) -> bool | None:
    if text == "":
        return None
    if text not in ("true", "false"):
        raise ConfigError(f"expected boolean field, got {text!r}")
    return text == "true"


def parse_runs_csv(path: str | os.PathLike) -> list[ResultRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ",".join(_SCHEMAS["runs"][1]):
        raise ConfigError(f"{path} is not a runs CSV")
    rows = []
    for line in lines[1:]:
        c, n, lam, factor, rsteps, subpops, seed, gens, evals, hit = line.split(",")
        rows.append(
            ResultRow(
                controller=c,
                n=int(n),
                lam=int(lam),
                factor=_parse_optional_float(factor),
                random_steps=_parse_optional_bool(rsteps),
                subpops=int(subpops),
                seed=int(seed),
                generations=int(gens),
                evaluations=int(evals),
                hit_optimum=hit == "true",
            )
        )
    return rows


def parse_summary_csv(path: str | os.PathLike) -> list[SummaryRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ",".join(_SCHEMAS["summary"][1]):
        raise ConfigError(f"{path} is not a summary CSV")
    rows = []
    for line in lines[1:]:
        c, n, lam, factor, runs, mean, q1, median, q3, std = line.split(",")
        rows.append(
            SummaryRow(
                controller=c,
                n=int(n),
                lam=int(lam),
                factor=_parse_optional_float(factor),
                runs=int(runs),
                mean_generations=float(mean),
                q1=float(q1),
                median=float(median),
                q3=float(q3),
                stddev=float(std),
            )
        )
    return rows


def parse_trajectory_csv(path: str | os.PathLike) -> list[tuple[int, int, float]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "t,k,r":
        raise ConfigError(f"{path} is not a trajectory CSV")
    out = []
    for line in lines[1:]:
        t, k, r = line.split(",")
        out.append((int(t), int(k), float(r)))
    return out


# --- plotting ---------------------------------------------------------------

PLOT_KINDS = ("runtime-vs-lambda", "rate-vs-fitness")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

_AXIS_LABELS = {
    "runtime-vs-lambda": ("lambda", "generations"),
    "rate-vs-fitness": ("fitness distance", "rate"),
}


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_d, hi_d = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        if hi_d - lo_d >= 1:
            return [10.0**d for d in range(lo_d, hi_d + 1)]
        return list(np.geomspace(lo, hi, 5))
    return list(np.linspace(lo, hi, 5))


def emit_plot(
    series: dict,
    kind: str,
    destination: str | os.PathLike,
    log_y: bool = False,
    title: str | None = None,
) -> Path:
    """Write a self-contained SVG line chart plus a companion data CSV.

    ``series`` maps a series name to its (x, y) points. Exactly one SVG
    polyline is emitted per series; the axis ranges always cover every data
    point. Returns the companion data file path (destination stem plus
    ``_data.csv``), which carries the exact plotted points.
    """
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    if not series or any(len(points) == 0 for points in series.values()):
        raise ConfigError("plot input must contain at least one non-empty series")
    for name in series:
        if "," in name or "\n" in name:
            raise ConfigError(f"series name {name!r} would corrupt the companion CSV")

    xs = [float(x) for pts in series.values() for x, _ in pts]
    ys = [float(y) for pts in series.values() for _, y in pts]
    if log_y and min(ys) <= 0.0:
        raise ConfigError("log-scale y axis requires positive values")

    def pad(lo, hi, log):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        span = hi - lo
        margin = 0.04 * span if span > 0 else max(1.0, abs(hi) * 0.05)
        return lo - margin, hi + margin

    x_lo, x_hi = pad(min(xs), max(xs), False)
    y_lo, y_hi = pad(min(ys), max(ys), log_y)

    width, height = 800.0, 520.0
    ml, mr, mt, mb = 70.0, 170.0, 30.0, 55.0

    def sx(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr)

    def sy(y):
        v = math.log10(y) if log_y else y
        return height - mb - (v - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    x_label, y_label = _AXIS_LABELS[kind]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
        f'<line x1="{ml:g}" y1="{height - mb:g}" x2="{width - mr:g}" y2="{height - mb:g}" stroke="black"/>',
        f'<line x1="{ml:g}" y1="{mt:g}" x2="{ml:g}" y2="{height - mb:g}" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{ml:g}" y="{mt - 10:g}" font-size="14">{title}</text>')

    for tick in _ticks(min(xs), max(xs), False):
        px = sx(tick)
        parts.append(f'<line x1="{px:.2f}" y1="{height - mb:g}" x2="{px:.2f}" y2="{height - mb + 5:g}" stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{height - mb + 20:g}" text-anchor="middle">{tick:g}</text>')
    for tick in _ticks(min(ys), max(ys), log_y):
        py = sy(tick)
        parts.append(f'<line x1="{ml - 5:g}" y1="{py:.2f}" x2="{ml:g}" y2="{py:.2f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 8:g}" y="{py + 4:.2f}" text-anchor="end">{tick:g}</text>')
    parts.append(
        f'<text x="{(ml + width - mr) / 2:.2f}" y="{height - 12:g}" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="18" y="{(mt + height - mb) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(mt + height - mb) / 2:.2f})">{y_label}{" (log)" if log_y else ""}</text>'
    )

    data_lines = ["series,x,y"]
    for idx, (name, points) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 18 + 18 * idx
        parts.append(
            f'<line x1="{width - mr + 10:g}" y1="{ly:g}" x2="{width - mr + 34:g}" y2="{ly:g}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{width - mr + 40:g}" y="{ly + 4:g}">{name}</text>')
        data_lines.extend(f"{name},{_format_field(float(x))},{_format_field(float(y))}" for x, y in points)
    parts.append("</svg>")

    destination = Path(destination)
    _atomic_write(destination, "\n".join(parts) + "\n")
    data_path = destination.with_name(destination.stem + "_data.csv")
    _atomic_write(data_path, "\n".join(data_lines) + "\n")
    return data_path


# --- verifier claims ---------------------------------------------------------

CLAIMS = (
    "far-increase",
    "far-decrease",
    "far-worse",
    "middle-drift",
    "far-drift",
    "near-region",
    "halving-floor",
)


def _params_string(**kwargs) -> str:
    return ";".join(f"{key}={value:g}" if isinstance(value, float) else f"{key}={value}" for key, value in kwargs.items())


def _drift_grid_row(claim, n, lam, points, threshold_desc) -> VerifyRow:
    ratios = []
    for k, r, bound in points:
        value = exact_drift(n, k, r, lam).value
        ratios.append(value / bound)
    worst = min(ratios)
    return VerifyRow(
        claim=claim,
        params=_params_string(n=n, **{"lambda": lam}, grid=len(points)),
        preconditions_ok=True,
        estimate=worst,
        ci_low=worst,
        ci_high=worst,
        threshold=1.0,
        passed=worst >= 1.0,
    )


def verify_claim(name: str, samples: int | None = None, seed: int = 0) -> VerifyRow:
    """Run one verifier claim at its default desk-scale parameters.

    ``estimate`` is the quantity the claim bounds (a probability, or for the
    drift claims the worst ratio of exact drift to its bound over the grid).
    ``preconditions_ok`` records whether the claim's stated preconditions hold
    at these parameters; when they cannot hold at desk scale the run is a
    qualitative check and is excluded from the verify exit status.
    """
    if name == "far-increase":
        n, k, lam, r = 100_000, 49_000, 10_000, 2.0
        res = mc_winner_origin(n=n, k=k, r=r, lam=lam, samples=samples or 10_000, seed=seed)
        est = res.any_best[1]
        return VerifyRow(
            claim=name,
            params=_params_string(n=n, k=k, **{"lambda": lam}, r=r, samples=est.samples),
            preconditions_ok=res.preconditions["increase_k_in_far_region"]
            and res.preconditions["increase_rate_below_c1_log_lambda"],
            estimate=est.point_estimate,
            ci_low=est.confidence_interval[0],
            ci_high=est.confidence_interval[1],
            threshold=0.64,
            passed=est.confidence_interval[0] >= 0.60,
        )
    if name == "far-decrease":
        n, k, lam, r = 10_000, 1_000, 100, 64.0
        res = mc_winner_origin(n=n, k=k, r=r, lam=lam, samples=samples or 100_000, seed=seed)
        est = res.all_best[0]
        return VerifyRow(
            claim=name,
            params=_params_string(n=n, k=k, **{"lambda": lam}, r=r, samples=est.samples),
            preconditions_ok=res.preconditions["decrease_lambda_at_least_100"]
            and res.preconditions["decrease_rate_above_c2_log_lambda"]
            and res.preconditions["decrease_rate_at_most_quarter_n"],
            estimate=est.point_estimate,
            ci_low=est.confidence_interval[0],
            ci_high=est.confidence_interval[1],
            threshold=0.51,
            passed=est.confidence_interval[0] >= 0.51 - 0.02,
        )
    if name == "far-worse":
        n, k, lam, gamma = 10_000, 1_000, 100, 1.0
        r = 2.0 * (1.0 + gamma) * region_bounds(n, k).c2 * math.log(lam)
        res = mc_all_worse(n=n, k=k, r=r, lam=lam, gamma=gamma, samples=samples or 100_000, seed=seed)
        est = res.estimate
        return VerifyRow(
            claim=name,
            params=_params_string(n=n, k=k, **{"lambda": lam}, r=round(r, 3), gamma=gamma, samples=est.samples),
            preconditions_ok=all(res.preconditions.values()),
            estimate=est.point_estimate,
            ci_low=est.confidence_interval[0],
            ci_high=est.confidence_interval[1],
            threshold=res.threshold,
            passed=est.point_estimate >= 0.985,
        )
    if name == "middle-drift":
        n, lam = 10_000, 100
        log_lam = math.log(lam)
        ks = np.unique(np.linspace(n // lam, int(n / log_lam), 5).astype(int))
        rs = np.linspace(2.0, log_lam, 4)
        points = [
            (int(k), float(r), min(1.0 / 8.0, math.sqrt(lam) * k / (32.0 * n)))
            for k in ks
            for r in rs
        ]
        return _drift_grid_row(name, n, lam, points, "middle bound")
    if name == "far-drift":
        n, lam = 100_000, 10_000
        log_lam = math.log(lam)
        ks = np.unique(np.linspace(int(n / log_lam), int(0.49 * n), 10).astype(int))
        points = []
        for k in ks:
            c1 = region_bounds(n, int(k)).c1
            bound = 1e-3 * log_lam / math.log(math.e * n / k)
            points.append((int(k), c1 * log_lam, bound))
        return _drift_grid_row(name, n, lam, points, "far bound")
    if name == "near-region":
        n, k, lam, r = 1_000_000, 1, 1_000, 4.0
        res = mc_rate_halving(n=n, k=k, r=r, lam=lam, samples=samples or 100_000, seed=seed)
        est = res.estimate
        return VerifyRow(
            claim=name,
            params=_params_string(n=n, k=k, **{"lambda": lam}, r=r, samples=est.samples),
            preconditions_ok=all(res.preconditions.values()),
            estimate=est.point_estimate,
            ci_low=est.confidence_interval[0],
            ci_high=est.confidence_interval[1],
            threshold=0.5099,
            passed=est.confidence_interval[0] > 0.50,
        )
    if name == "halving-floor":
        state = two_rate_state(n=1_000, initial_rate=16.0)
        worst = 1.0
        for winner in (0, 1):
            outcome = GenerationOutcome(winner_subpopulation=winner, best_fitness_distance=1, improved=False)
            branches = dict(enumerate_update_outcomes(state, outcome))
            worst = min(worst, branches.get(state.rate / state.update_factor, 0.0))
        return VerifyRow(
            claim=name,
            params=_params_string(n=1000, r=16.0, F=2.0),
            preconditions_ok=True,
            estimate=worst,
            ci_low=worst,
            ci_high=worst,
            threshold=0.25,
            passed=worst >= 0.25,
        )
    raise ConfigError(f"unknown claim {name!r}; expected one of {CLAIMS}")


def verify_suite(names=None, samples: int | None = None, seed: int = 0) -> list[VerifyRow]:
    return [verify_claim(name, samples=samples, seed=seed) for name in (names or CLAIMS)]
