"""Experiment harness: declarative configs, method sweeps, and CSV traces.

A run configuration is a single JSON document::

    {
      "problem": {"id": "linear_tridiag", "n": 100},
      "methods": [
        {"method": "anderson", "m": 2},
        {"method": "crop", "m": "inf"},
        {"method": "gmres"}
      ],
      "tol": 1e-10,
      "maxit": 100,
      "x0": "zeros",                      // "ones" | [..] | {"random": {...}}
      "output": "out/tridiag.csv"
    }

``x0.random`` requires ``seed`` (plus optional ``low``/``high``) and draws the
start vector from the repository's counter-based generator, so identical
configs always produce byte-identical CSV files.  Traces are written with the
fixed header ``method,m,beta,k,control_res_norm,real_res_norm,status`` and
norms serialized in scientific notation with 17 significant digits.

``gmres`` entries run the reference Krylov solver on the problem's linear
data and are traced in the same format (depth column ``inf``).
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import rng
from .accel import Method, SolveOptions, Status, solve
from .errors import ConfigError
from .krylov_ref import KrylovStatus, gmres_solve
from .problems import Problem, build_problem

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "ExperimentResult",
    "MethodSpec",
    "RunResult",
    "SweepResult",
    "compare_methods",
    "format_norm",
    "load_config",
    "parse_config",
    "rfactor_sweep",
    "run_experiment",
]

CSV_HEADER = ["method", "m", "beta", "k", "control_res_norm", "real_res_norm", "status"]
SWEEP_HEADER = ["angle", "method", "m", "r_factor"]
GAMMA_HEADER = ["angle", "method", "m", "k", "gamma"]

_METHOD_IDS = {m.value for m in Method} | {"gmres"}
_RESIDUAL_MODES = ("control", "real", "adaptive")


def format_norm(value: float) -> str:
    """Scientific notation with 17 significant digits (round-trip exact)."""
    return f"{value:.16e}"


@dataclass(frozen=True)
class MethodSpec:
    """One method entry of a sweep: identifier, depth, damping, residual mode."""

    method: str
    m: int | None = None
    beta: float = 1.0
    residual_mode: str = "control"

    @property
    def m_label(self) -> str:
        return "inf" if self.m is None else str(self.m)

    @property
    def label(self) -> str:
        return f"{self.method}(m={self.m_label})"


@dataclass
class ExperimentConfig:
    """Validated experiment description (see module docstring for the schema)."""

    problem: dict
    methods: list[MethodSpec]
    tol: float = 1e-10
    maxit: int = 100
    x0: object = "zeros"
    output: str | None = None
    trace_real_residuals: bool = True
    label: str = ""
    angle_samples: int = 64
    seed: int | None = None


@dataclass
class RunResult:
    """Flattened outcome of one method run, ready for CSV assembly."""

    spec: MethodSpec
    status: str
    iterations: int
    rows: list[tuple[int, float, float | None]]
    final_real_residual: float
    q_factor: float | None = None
    r_factor: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED.value


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunResult]
    csv_path: Path | None = None
    figure_path: Path | None = None


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[tuple[float, MethodSpec, float]]
    gamma_rows: list[tuple[float, MethodSpec, int, float]] = field(default_factory=list)
    csv_path: Path | None = None
    gamma_csv_path: Path | None = None
    figure_path: Path | None = None


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def _parse_depth(raw, where: str) -> int | None:
    if raw is None or raw == "inf":
        return None
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 1:
        raise ConfigError(f"{where}: depth 'm' must be a positive integer or \"inf\", got {raw!r}")
    return raw


def _parse_method(entry, index: int) -> MethodSpec:
    where = f"methods[{index}]"
    if not isinstance(entry, Mapping):
        raise ConfigError(f"{where}: expected an object, got {type(entry).__name__}")
    unknown = set(entry) - {"method", "m", "beta", "residual_mode"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    name = entry.get("method")
    if name not in _METHOD_IDS:
        raise ConfigError(f"{where}: unknown method {name!r} (known: {sorted(_METHOD_IDS)})")
    beta = entry.get("beta", 1.0)
    if not isinstance(beta, (int, float)) or isinstance(beta, bool) or beta <= 0:
        raise ConfigError(f"{where}: beta must be a positive number, got {beta!r}")
    mode = entry.get("residual_mode", "control")
    if mode not in _RESIDUAL_MODES:
        raise ConfigError(f"{where}: residual_mode must be one of {_RESIDUAL_MODES}, got {mode!r}")
    return MethodSpec(
        method=name,
        m=_parse_depth(entry.get("m"), where),
        beta=float(beta),
        residual_mode=mode,
    )


def _validate_x0(raw) -> object:
    if raw in ("zeros", "ones"):
        return raw
    if isinstance(raw, list):
        try:
            vec = [float(v) for v in raw]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"x0 vector entries must be numbers: {exc}") from exc
        return vec
    if isinstance(raw, Mapping):
        spec = raw.get("random")
        if not isinstance(spec, Mapping):
            raise ConfigError("x0 object form must be {\"random\": {...}}")
        unknown = set(spec) - {"seed", "low", "high"}
        if unknown:
            raise ConfigError(f"x0.random: unknown keys {sorted(unknown)}")
        if "seed" in spec and (isinstance(spec["seed"], bool) or not isinstance(spec["seed"], int)):
            raise ConfigError(f"x0.random.seed must be an integer, got {spec['seed']!r}")
        low = spec.get("low", 0.0)
        high = spec.get("high", 1.0)
        if not (isinstance(low, (int, float)) and isinstance(high, (int, float)) and high > low):
            raise ConfigError(f"x0.random needs numeric low < high, got {low!r}, {high!r}")
        return {"random": dict(spec)}
    raise ConfigError(f"x0 must be \"zeros\", \"ones\", a vector, or a random spec, got {raw!r}")


def parse_config(data: Mapping) -> ExperimentConfig:
    """Validate a parsed JSON document into an ExperimentConfig."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    known = {
        "problem", "methods", "tol", "maxit", "x0", "output",
        "trace_real_residuals", "label", "angle_samples", "seed",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    problem = data.get("problem")
    if not isinstance(problem, Mapping) or "id" not in problem:
        raise ConfigError('config needs a "problem" object with an "id"')
    raw_methods = data.get("methods", [])
    if not isinstance(raw_methods, list):
        raise ConfigError('"methods" must be a list')
    methods = [_parse_method(entry, i) for i, entry in enumerate(raw_methods)]
    tol = data.get("tol", 1e-10)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol <= 0:
        raise ConfigError(f"tol must be a positive number, got {tol!r}")
    maxit = data.get("maxit", 100)
    if isinstance(maxit, bool) or not isinstance(maxit, int) or maxit < 1:
        raise ConfigError(f"maxit must be a positive integer, got {maxit!r}")
    angle_samples = data.get("angle_samples", 64)
    if isinstance(angle_samples, bool) or not isinstance(angle_samples, int) or angle_samples < 1:
        raise ConfigError(f"angle_samples must be a positive integer, got {angle_samples!r}")
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    return ExperimentConfig(
        problem=dict(problem),
        methods=methods,
        tol=float(tol),
        maxit=maxit,
        x0=_validate_x0(data.get("x0", "zeros")),
        output=data.get("output"),
        trace_real_residuals=bool(data.get("trace_real_residuals", True)),
        label=str(data.get("label", "")),
        angle_samples=angle_samples,
        seed=seed,
    )


def make_x0(x0_spec, dimension: int, seed_override: int | None = None) -> np.ndarray:
    """Materialize a start vector from its config form."""
    if x0_spec == "zeros":
        return np.zeros(dimension)
    if x0_spec == "ones":
        return np.ones(dimension)
    if isinstance(x0_spec, list):
        vec = np.asarray(x0_spec, dtype=np.float64)
        if vec.shape != (dimension,):
            raise ConfigError(f"x0 vector has length {vec.size}, problem dimension {dimension}")
        return vec
    spec = x0_spec["random"]
    seed = seed_override if seed_override is not None else spec.get("seed")
    if seed is None:
        raise ConfigError("x0.random requires a seed (config key or --seed)")
    return rng.uniform(seed, dimension, float(spec.get("low", 0.0)), float(spec.get("high", 1.0)))


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------


def _worker_count(n_runs: int) -> int:
    raw = os.environ.get("ACCEL_KIT_THREADS", "")
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ConfigError(f"ACCEL_KIT_THREADS must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ConfigError(f"ACCEL_KIT_THREADS must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_runs))


def _run_one(problem: Problem, spec: MethodSpec, config: ExperimentConfig,
             x0: np.ndarray) -> RunResult:
    if spec.method == "gmres":
        return _run_gmres(problem, spec, config, x0)
    options = SolveOptions(
        depth=spec.m,
        beta=spec.beta,
        tol=config.tol,
        maxit=config.maxit,
        residual_mode=spec.residual_mode,
        trace_real_residuals=config.trace_real_residuals,
    )
    report = solve(problem, Method(spec.method), options, x0=x0)
    rows = [(row.k, row.control_res_norm, row.real_res_norm) for row in report.trace]
    final_real = float(np.linalg.norm(problem.residual(report.solution)))
    return RunResult(
        spec=spec,
        status=report.status.value,
        iterations=report.iterations,
        rows=rows,
        final_real_residual=final_real,
        q_factor=report.diagnostics.q_factor_estimate,
        r_factor=report.diagnostics.r_factor_estimate,
    )


def _run_gmres(problem: Problem, spec: MethodSpec, config: ExperimentConfig,
               x0: np.ndarray) -> RunResult:
    if problem.linear_operator is None or problem.rhs is None:
        raise ConfigError(
            f"method 'gmres' needs a linear problem, but {problem.label} provides no operator"
        )
    _, trace = gmres_solve(
        problem.linear_operator, problem.rhs, x0=x0, tol=config.tol, maxit=config.maxit
    )
    status = {
        KrylovStatus.CONVERGED: Status.CONVERGED.value,
        KrylovStatus.MAX_ITERATIONS: Status.MAX_ITERATIONS.value,
        KrylovStatus.STALLED: Status.STAGNATION.value,
    }[trace.status]
    rows = [
        (k, norm, norm if config.trace_real_residuals else None)
        for k, norm in enumerate(trace.residual_norms)
    ]
    final_real = trace.residual_norms[-1]
    q = r = None
    norms = np.asarray(trace.residual_norms)
    if norms.size >= 2 and np.all(norms[:-1] > 0):
        ratios = norms[1:] / norms[:-1]
        q = float(np.max(ratios))
        r = float((norms[-1] / norms[0]) ** (1.0 / (norms.size - 1)))
    return RunResult(
        spec=spec,
        status=status,
        iterations=len(trace.residual_norms) - 1,
        rows=rows,
        final_real_residual=final_real,
        q_factor=q,
        r_factor=r,
    )


def _write_trace_csv(path: Path, runs: Sequence[RunResult]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for run in runs:
            for k, control, real in run.rows:
                writer.writerow([
                    run.spec.method,
                    run.spec.m_label,
                    repr(run.spec.beta),
                    k,
                    format_norm(control),
                    "" if real is None else format_norm(real),
                    run.status,
                ])


def run_experiment(
    config: ExperimentConfig,
    output: str | os.PathLike | None = None,
    seed_override: int | None = None,
    plot: bool = True,
) -> ExperimentResult:
    """Run every configured method, write the trace CSV, and summarize.

    Identical configs (including seeds) produce byte-identical CSV files.
    Method runs are independent and may execute in parallel (capped by the
    ``ACCEL_KIT_THREADS`` environment variable); rows are always assembled in
    config order.
    """
    problem = build_problem(config.problem)
    x0 = make_x0(config.x0, problem.dimension, seed_override)
    workers = _worker_count(max(1, len(config.methods)))
    if workers > 1 and len(config.methods) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda s: _run_one(problem, s, config, x0), config.methods))
    else:
        runs = [_run_one(problem, spec, config, x0) for spec in config.methods]

    csv_path = figure_path = None
    target = output if output is not None else config.output
    if target is not None:
        csv_path = Path(target)
        _write_trace_csv(csv_path, runs)
        if plot:
            from .plotting import render_convergence_figure

            figure_path = csv_path.with_suffix(".png")
            render_convergence_figure(runs, figure_path, title=config.label or problem.label)
    return ExperimentResult(config=config, runs=runs, csv_path=csv_path, figure_path=figure_path)


def summary_lines(result: ExperimentResult) -> list[str]:
    """Human-readable per-method summary block."""
    lines = []
    for run in result.runs:
        parts = [
            f"{run.spec.label:<24s}",
            f"status={run.status:<14s}",
            f"iterations={run.iterations:<4d}",
            f"final_real_residual={run.final_real_residual:.3e}",
        ]
        if run.q_factor is not None:
            parts.append(f"q_factor={run.q_factor:.4f}")
        if run.r_factor is not None:
            parts.append(f"r_factor={run.r_factor:.4f}")
        lines.append("  ".join(parts))
    return lines


def compare_methods(
    config: ExperimentConfig,
    output: str | os.PathLike | None = None,
    seed_override: int | None = None,
    plot: bool = True,
) -> tuple[ExperimentResult, list[RunResult]]:
    """Run a sweep and rank methods by iterations-to-tolerance.

    Converged runs come first, ordered by iteration count and then by final
    real residual; failed runs follow, ordered by final real residual.  Ties
    keep config order, so identical entries produce identical adjacent rows.
    """
    if len(config.methods) < 2:
        raise ConfigError("compare needs at least two method entries")
    result = run_experiment(config, output=output, seed_override=seed_override, plot=plot)
    ranking = sorted(
        result.runs,
        key=lambda run: (
            (0, run.iterations, run.final_real_residual)
            if run.converged
            else (1, run.final_real_residual, run.iterations)
        ),
    )
    return result, ranking


def ranking_lines(ranking: Sequence[RunResult]) -> list[str]:
    lines = ["rank  method                    iterations  status          final_real_residual"]
    for i, run in enumerate(ranking, start=1):
        iters = str(run.iterations) if run.converged else "-"
        lines.append(
            f"{i:<4d}  {run.spec.label:<24s}  {iters:<10s}  {run.status:<14s}  "
            f"{run.final_real_residual:.3e}"
        )
    return lines


# ---------------------------------------------------------------------------
# Convergence-factor sweep over start directions
# ---------------------------------------------------------------------------


def rfactor_sweep(
    config: ExperimentConfig,
    output: str | os.PathLike | None = None,
    seed_override: int | None = None,
    plot: bool = True,
) -> SweepResult:
    """Sweep start-vector angles on the 2x2 model problem and record r-factors.

    For each sampled angle the start vector is ``radius * (cos, sin)`` with a
    seeded random radius in [0.1, 0.5); every configured method runs to
    ``tol`` (default 1e-16) or ``maxit`` (default 100).  Depth-1 mixing
    methods additionally log their per-step affine weight so the oscillation
    patterns can be inspected.
    """
    if config.problem.get("id") != "linear_small2x2":
        raise ConfigError("rfactor_sweep runs on the linear_small2x2 problem only")
    if not config.methods:
        raise ConfigError("rfactor_sweep needs at least one method entry")
    for spec in config.methods:
        if spec.method == "gmres":
            raise ConfigError("rfactor_sweep supports fixed-point style methods only")
    problem = build_problem(config.problem)
    seed = seed_override if seed_override is not None else (config.seed or 0)
    radii = rng.uniform(seed, config.angle_samples, 0.1, 0.5)
    angles = -0.5 * np.pi + np.pi * np.arange(config.angle_samples) / config.angle_samples

    rows: list[tuple[float, MethodSpec, float]] = []
    gamma_rows: list[tuple[float, MethodSpec, int, float]] = []
    for angle, radius in zip(angles, radii):
        x0 = radius * np.array([np.cos(angle), np.sin(angle)])
        for spec in config.methods:
            options = SolveOptions(
                depth=spec.m,
                beta=spec.beta,
                tol=config.tol,
                maxit=config.maxit,
                residual_mode=spec.residual_mode,
            )
            report = solve(problem, Method(spec.method), options, x0=x0)
            r_factor = report.diagnostics.r_factor_estimate
            rows.append((float(angle), spec, float("nan") if r_factor is None else r_factor))
            if spec.m == 1 and spec.method in ("anderson", "crop", "crop_anderson"):
                for row in report.trace:
                    if row.gamma is not None and row.gamma.size:
                        gamma_rows.append((float(angle), spec, row.k, float(row.gamma[-1])))

    csv_path = gamma_path = figure_path = None
    target = output if output is not None else config.output
    if target is not None:
        csv_path = Path(target)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            for angle, spec, r_factor in rows:
                writer.writerow([
                    format_norm(angle), spec.method, spec.m_label, format_norm(r_factor),
                ])
        gamma_path = csv_path.with_name(csv_path.stem + "_gamma" + csv_path.suffix)
        with open(gamma_path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(GAMMA_HEADER)
            for angle, spec, k, gamma in gamma_rows:
                writer.writerow([
                    format_norm(angle), spec.method, spec.m_label, k, format_norm(gamma),
                ])
        if plot:
            from .plotting import render_rfactor_figure

            figure_path = csv_path.with_suffix(".png")
            render_rfactor_figure(rows, gamma_rows, figure_path,
                                  title=config.label or problem.label)
    return SweepResult(
        config=config,
        rows=rows,
        gamma_rows=gamma_rows,
        csv_path=csv_path,
        gamma_csv_path=gamma_path,
        figure_path=figure_path,
    )
