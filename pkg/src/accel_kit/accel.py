"""Acceleration methods for fixed-point iterations and their diagnostics.

The package implements one family of mixing accelerators around a shared
sliding window of recent iterates and residuals:

* ``fixed_point`` -- the plain damped iteration ``x + beta f(x)``,
* ``anderson`` -- Anderson mixing: the next iterate combines the window's
  iterates and residuals with weights minimizing the combined residual norm,
* ``crop`` -- conjugate-residual-style mixing with optimal trial vectors: a
  preliminary iterate ``x + f`` is formed first, then the window of *optimal*
  iterates plus the preliminary one is recombined, carrying a recursively
  mixed residual (the *control* residual) instead of re-evaluating,
* ``rcrop`` -- the same scheme but re-evaluating the true (*real*) residual
  at every accepted iterate,
* ``crop_anderson`` / ``rcrop_anderson`` -- the same recursion reported at
  the preliminary-iterate sequence, which reproduces Anderson's iterates when
  untruncated,
* ``adaptive_crop`` -- control residuals with a periodic check of the angle
  between control and real residuals, switching permanently to real residuals
  once they disagree.

Control residuals are cheap but can collapse to zero without the underlying
problem being solved; the drivers detect that as a breakdown by comparing the
control norm against ``breakdown_rel_tol`` times the initial residual norm
while the real residual still exceeds the tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateTrace,
    DimensionMismatch,
    SingularWindow,
    ZeroVector,
)
from .la_core import (
    DEFAULT_RANK_TOL,
    GrowingQr,
    MixingCoefficients,
    gamma_to_alpha,
    qr_factor,
    solve_mixing,
)
from .problems import Problem

__all__ = [
    "ConvergenceDiagnostics",
    "HistoryWindow",
    "Method",
    "SolveOptions",
    "SolveReport",
    "Status",
    "TraceRecord",
    "anderson_step",
    "approx_inverse_jacobian",
    "assumption_m_estimate",
    "coefficient_history",
    "cos_theta",
    "crop_step",
    "estimate_contraction",
    "estimate_convergence_factors",
    "solve",
]

_STAGNATION_STEPS = 5
_STAGNATION_REL = 1e-15


class Method(str, Enum):
    """Identifiers of the solver drivers."""

    FIXED_POINT = "fixed_point"
    ANDERSON = "anderson"
    CROP = "crop"
    CROP_ANDERSON = "crop_anderson"
    RCROP = "rcrop"
    RCROP_ANDERSON = "rcrop_anderson"
    ADAPTIVE_CROP = "adaptive_crop"


class Status(str, Enum):
    """Final state of a solver run."""

    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    BREAKDOWN = "Breakdown"
    STAGNATION = "Stagnation"
    NUMERICAL_FAILURE = "NumericalFailure"


class HistoryWindow:
    """Sliding window of recent iterates and their residual vectors.

    ``max_entries`` bounds the number of stored pairs (None keeps all).  The
    Anderson driver uses depth + 1 entries, the mixing recursion of the CROP
    family keeps depth entries and adds the preliminary iterate transiently.
    """

    def __init__(self, max_entries: int | None = None) -> None:
        if max_entries is not None and max_entries < 1:
            raise ValueError(f"max_entries must be positive, got {max_entries}")
        self.max_entries = max_entries
        self.iterate_cols: list[np.ndarray] = []
        self.residual_cols: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.iterate_cols)

    def push(self, x: np.ndarray, f: np.ndarray) -> None:
        self.iterate_cols.append(np.asarray(x, dtype=np.float64))
        self.residual_cols.append(np.asarray(f, dtype=np.float64))
        if self.max_entries is not None:
            while len(self.iterate_cols) > self.max_entries:
                self.iterate_cols.pop(0)
                self.residual_cols.pop(0)

    def iterate_matrix(self) -> np.ndarray:
        return np.column_stack(self.iterate_cols)

    def residual_matrix(self) -> np.ndarray:
        return np.column_stack(self.residual_cols)


@dataclass
class SolveOptions:
    """Solver parameters shared by all methods.

    ``depth`` is the window depth m (None means untruncated, i.e. the window
    never evicts within the iteration budget).  ``residual_mode`` applies to
    the CROP-family methods given as ``crop`` / ``crop_anderson``; the
    ``rcrop*`` and ``adaptive_crop`` method names force their own mode.
    """

    depth: int | None = None
    beta: float = 1.0
    tol: float = 1e-10
    maxit: int = 100
    residual_mode: str = "control"
    adaptive_period: int = 5
    adaptive_cos_threshold: float = 0.99
    breakdown_rel_tol: float = 1e-14
    trace_real_residuals: bool = False
    keep_iterates: bool = False
    ls_strategy: str = "auto"
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self) -> None:
        if self.depth is not None and self.depth < 1:
            raise ValueError(f"depth must be >= 1 or None, got {self.depth}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.maxit < 1:
            raise ValueError(f"maxit must be >= 1, got {self.maxit}")
        if self.residual_mode not in ("control", "real", "adaptive"):
            raise ValueError(f"unknown residual_mode {self.residual_mode!r}")
        if self.adaptive_period < 1:
            raise ValueError(f"adaptive_period must be >= 1, got {self.adaptive_period}")
        if not 0.0 < self.adaptive_cos_threshold < 1.0:
            raise ValueError(
                f"adaptive_cos_threshold must lie in (0, 1), got {self.adaptive_cos_threshold}"
            )
        if self.ls_strategy not in ("auto", "rebuild"):
            raise ValueError(f"unknown ls_strategy {self.ls_strategy!r}")


@dataclass
class TraceRecord:
    """Per-iterate record of a solver run.

    ``gamma`` holds the affine-frame mixing weights of the step that produced
    this iterate (None for the start vector and plain-map steps), ``fallback``
    flags steps degraded to the damped fixed-point update because the rank
    guard rejected every difference column.
    """

    k: int
    control_res_norm: float
    real_res_norm: float | None = None
    alpha_last: float | None = None
    gamma: np.ndarray | None = None
    wall_nanos: int = 0
    fallback: bool = False


@dataclass(frozen=True)
class ConvergenceDiagnostics:
    """Measured convergence factors of a residual-norm trace.

    ``q_factor_estimate`` is the worst consecutive-norm ratio,
    ``r_factor_estimate`` the geometric mean rate over the whole trace, and
    ``contraction_estimate`` an optional Lipschitz surrogate of the map.
    """

    q_factor_estimate: float | None = None
    r_factor_estimate: float | None = None
    contraction_estimate: float | None = None


@dataclass
class SolveReport:
    """Outcome of a solver run: final status, trace, and diagnostics."""

    status: Status
    iterations: int
    solution: np.ndarray
    trace: list[TraceRecord]
    diagnostics: ConvergenceDiagnostics
    method: Method
    iterates: list[np.ndarray] | None = None

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([row.control_res_norm for row in self.trace])


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------


def anderson_step(window: HistoryWindow, beta: float) -> np.ndarray:
    """One Anderson update from a window of iterates and residuals.

    Returns the mixed iterate plus ``beta`` times the mixed residual; with a
    single stored entry this reduces to the damped fixed-point step.
    """
    coeffs, mixed = solve_mixing(window.residual_matrix())
    xbar = window.iterate_matrix() @ coeffs.alpha
    return xbar + beta * mixed


def crop_step(
    window: HistoryWindow,
    problem: Problem,
    residual_mode: str = "control",
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One step of the optimal-trial-vector recursion.

    Forms the preliminary iterate ``x + f`` from the newest window entry,
    evaluates its residual, recombines the window plus the preliminary pair
    with optimal weights, and returns ``(x_next, f_next, x_tilde, f_tilde)``.
    ``f_next`` is the mixed control residual, or the re-evaluated real
    residual when ``residual_mode == "real"``.
    """
    if residual_mode not in ("control", "real"):
        raise ValueError(f"unknown residual_mode {residual_mode!r}")
    x_tilde = window.iterate_cols[-1] + window.residual_cols[-1]
    f_tilde = problem.residual(x_tilde)
    f_ls = np.column_stack(window.residual_cols + [f_tilde])
    coeffs, mixed = solve_mixing(f_ls)
    x_ls = np.column_stack(window.iterate_cols + [x_tilde])
    x_next = x_ls @ coeffs.alpha
    f_next = problem.residual(x_next) if residual_mode == "real" else mixed
    return x_next, f_next, x_tilde, f_tilde


def cos_theta(control_res: np.ndarray, real_res: np.ndarray) -> float:
    """Cosine of the angle between control and real residual vectors."""
    nc = float(np.linalg.norm(control_res))
    nr = float(np.linalg.norm(real_res))
    if nc == 0.0 or nr == 0.0:
        raise ZeroVector("cos_theta needs two nonzero vectors")
    value = float(control_res @ real_res) / (nc * nr)
    return float(np.clip(value, -1.0, 1.0))


def approx_inverse_jacobian(
    window: HistoryWindow,
    flavor: str,
    beta: float = 1.0,
) -> np.ndarray:
    """Multisecant approximate inverse Jacobian implied by a window.

    For difference matrices DX and DF of the window entries this returns

        anderson:  -beta I + (DX + beta DF) [DF^T DF]^{-1} DF^T
        crop:      DX [DF^T DF]^{-1} DF^T

    Both satisfy the multisecant condition G @ DF = DX when DF has full
    column rank; rank deficiency raises :class:`SingularWindow`.
    """
    if flavor not in ("anderson", "crop"):
        raise ValueError(f"unknown flavor {flavor!r}")
    if len(window) < 2:
        raise SingularWindow("window must hold at least two entries")
    dx = np.diff(window.iterate_matrix(), axis=1)
    df = np.diff(window.residual_matrix(), axis=1)
    if qr_factor(df).numerical_rank < df.shape[1]:
        raise SingularWindow("difference columns are numerically rank deficient")
    pinv_df = np.linalg.solve(df.T @ df, df.T)
    if flavor == "anderson":
        n = dx.shape[0]
        return -beta * np.eye(n) + (dx + beta * df) @ pinv_df
    return dx @ pinv_df


def estimate_convergence_factors(trace: Sequence[float]) -> ConvergenceDiagnostics:
    """Worst-ratio (q) and geometric-mean (r) factors of a residual trace."""
    norms = np.asarray(trace, dtype=np.float64)
    if norms.ndim != 1 or norms.size < 2:
        raise DegenerateTrace(f"need at least two residual norms, got {norms.size}")
    if np.any(norms[:-1] <= 0.0):
        raise DegenerateTrace("residual norms must stay positive until the final entry")
    ratios = norms[1:] / norms[:-1]
    q = float(np.max(ratios))
    r = float((norms[-1] / norms[0]) ** (1.0 / (norms.size - 1)))
    return ConvergenceDiagnostics(q_factor_estimate=q, r_factor_estimate=r)


def estimate_contraction(problem: Problem, probes: int = 8, seed: int = 0) -> float:
    """Lipschitz surrogate of the fixed-point map from random probe pairs.

    On a linear problem this estimates (a lower bound of) the operator norm
    of I - A, the factor governing per-step residual contraction.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        u = rng.standard_normal(problem.dimension)
        v = rng.standard_normal(problem.dimension)
        du = np.linalg.norm(u - v)
        if du == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(problem.map(u) - problem.map(v)) / du))
    return worst


def assumption_m_estimate(
    coefficient_history: Iterable[MixingCoefficients | np.ndarray],
) -> np.ndarray:
    """Absolute coefficient sums of the accumulated mixing products.

    Step ``i`` of the recursion replaces column ``i`` of the identity with its
    mixing weights (placed in the rows of the window it acted on); chaining
    those matrices expresses every accepted iterate as a combination of the
    preliminary iterates.  The returned vector holds the 1-norm of that
    combination for each step -- the quantity whose boundedness underpins the
    r-linear convergence of the truncated recursion.
    """
    alphas: list[np.ndarray] = []
    for entry in coefficient_history:
        alpha = entry.alpha if isinstance(entry, MixingCoefficients) else np.asarray(entry)
        alphas.append(np.asarray(alpha, dtype=np.float64))
    k_total = len(alphas)
    product = np.eye(k_total + 1)
    sums = np.empty(k_total + 1)
    sums[0] = 1.0
    for i, alpha in enumerate(alphas, start=1):
        width = alpha.size - 1
        if width > i or alpha.size < 1:
            raise DimensionMismatch(
                f"step {i} has {alpha.size} weights, window cannot exceed {i + 1}"
            )
        step_matrix = np.eye(k_total + 1)
        step_matrix[:, i] = 0.0
        step_matrix[i - width : i + 1, i] = alpha
        product = product @ step_matrix
        sums[i] = float(np.sum(np.abs(product[: i + 1, i])))
    return sums


def coefficient_history(report: SolveReport) -> list[MixingCoefficients]:
    """Mixing coefficients recorded in a report's trace, in step order."""
    history = []
    for row in report.trace:
        if row.gamma is not None:
            history.append(MixingCoefficients(alpha=gamma_to_alpha(row.gamma), gamma=row.gamma))
    return history


# ---------------------------------------------------------------------------
# Solver drivers
# ---------------------------------------------------------------------------


def _damped_problem(problem: Problem, beta: float) -> Problem:
    """Rewrite the problem with residual beta*f so drivers can assume beta=1."""
    if beta == 1.0:
        return problem
    base = problem.residual

    def residual(x: np.ndarray) -> np.ndarray:
        return beta * base(x)

    def fixed_point(x: np.ndarray) -> np.ndarray:
        return x + residual(x)

    op = problem.linear_operator
    rhs = problem.rhs
    if op is not None and rhs is not None:
        base_apply = op.apply
        op = replace(op, apply=lambda v: beta * base_apply(v))
        rhs = beta * rhs
    return replace(
        problem,
        residual=residual,
        map=fixed_point,
        label=f"{problem.label}|beta={beta}",
        linear_operator=op,
        rhs=rhs,
    )


def _normalize_method(method: Method | str, options: SolveOptions) -> tuple[str, str]:
    method = Method(method)
    if method is Method.FIXED_POINT:
        return "fixed_point", "control"
    if method is Method.ANDERSON:
        return "anderson", "control"
    if method is Method.CROP:
        return "crop", options.residual_mode
    if method is Method.RCROP:
        return "crop", "real"
    if method is Method.ADAPTIVE_CROP:
        return "crop", "adaptive"
    if method is Method.CROP_ANDERSON:
        return "crop_anderson", options.residual_mode
    return "crop_anderson", "real"


def _stagnated(norms: Sequence[float]) -> bool:
    """Five consecutive steps with relative residual change below 1e-15."""
    if len(norms) < _STAGNATION_STEPS + 1:
        return False
    recent = norms[-(_STAGNATION_STEPS + 1) :]
    return all(
        prev > 0.0 and abs(curr - prev) <= _STAGNATION_REL * prev
        for prev, curr in zip(recent[:-1], recent[1:])
    )


class _RunState:
    """Bookkeeping shared by the drivers: trace rows, iterates, timing."""

    def __init__(self, options: SolveOptions, method: Method) -> None:
        self.options = options
        self.method = method
        self.trace: list[TraceRecord] = []
        self.iterates: list[np.ndarray] | None = [] if options.keep_iterates else None
        self.norms: list[float] = []
        self._last_clock = time.perf_counter_ns()

    def record(
        self,
        k: int,
        x: np.ndarray,
        control_norm: float,
        real_norm: float | None = None,
        coeffs: MixingCoefficients | None = None,
        fallback: bool = False,
    ) -> TraceRecord:
        now = time.perf_counter_ns()
        row = TraceRecord(
            k=k,
            control_res_norm=control_norm,
            real_res_norm=real_norm,
            alpha_last=float(coeffs.alpha[-1]) if coeffs is not None else None,
            gamma=coeffs.gamma.copy() if coeffs is not None else None,
            wall_nanos=now - self._last_clock,
            fallback=fallback,
        )
        self._last_clock = now
        self.trace.append(row)
        self.norms.append(control_norm)
        if self.iterates is not None:
            self.iterates.append(np.array(x, copy=True))
        return row

    def finish(self, status: Status, solution: np.ndarray) -> SolveReport:
        diagnostics = ConvergenceDiagnostics()
        norms = np.asarray(self.norms)
        if norms.size >= 2 and np.all(norms[:-1] > 0.0):
            diagnostics = estimate_convergence_factors(norms)
        return SolveReport(
            status=status,
            iterations=len(self.trace) - 1,
            solution=np.array(solution, copy=True),
            trace=self.trace,
            diagnostics=diagnostics,
            method=self.method,
            iterates=self.iterates,
        )


def _use_growing_engine(options: SolveOptions, depth_effective: int) -> bool:
    # Untruncated windows never evict, so the incrementally extended QR is
    # both valid and much cheaper than a per-step rebuild.
    return options.ls_strategy != "rebuild" and depth_effective >= options.maxit


def solve(
    problem: Problem,
    method: Method | str,
    options: SolveOptions | None = None,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Run one acceleration method on a fixed-point problem.

    ``x0`` defaults to the zero vector.  Damping ``beta != 1`` is applied by
    rewriting the residual as ``beta * f`` up front, so every driver and every
    reported residual refers to the damped map.  Failures surface through the
    report status, never as exceptions.
    """
    options = options or SolveOptions()
    method = Method(method)
    if problem.dimension < 1:
        raise DimensionMismatch("problem dimension must be at least 1")
    if x0 is None:
        start = np.zeros(problem.dimension)
    else:
        start = np.asarray(x0, dtype=np.float64).copy()
        if start.shape != (problem.dimension,):
            raise DimensionMismatch(
                f"x0 has shape {start.shape}, problem dimension is {problem.dimension}"
            )
    work = _damped_problem(problem, options.beta)
    kind, mode = _normalize_method(method, options)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        if kind == "fixed_point":
            return _solve_fixed_point(work, options, start, method)
        if kind == "anderson":
            return _solve_anderson(work, options, start, method)
        return _solve_crop(work, options, start, method, kind, mode)


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def _solve_fixed_point(
    problem: Problem, options: SolveOptions, x: np.ndarray, method: Method
) -> SolveReport:
    state = _RunState(options, method)
    f = problem.residual(x)
    norm = _norm(f)
    state.record(0, x, norm, real_norm=norm if options.trace_real_residuals else None)
    if not np.isfinite(norm):
        return state.finish(Status.NUMERICAL_FAILURE, x)
    if norm < options.tol:
        return state.finish(Status.CONVERGED, x)
    for _ in range(options.maxit):
        x = x + f
        f = problem.residual(x)
        norm = _norm(f)
        state.record(
            len(state.trace), x, norm, real_norm=norm if options.trace_real_residuals else None
        )
        if not np.isfinite(norm):
            return state.finish(Status.NUMERICAL_FAILURE, x)
        if norm < options.tol:
            return state.finish(Status.CONVERGED, x)
        if _stagnated(state.norms):
            return state.finish(Status.STAGNATION, x)
    return state.finish(Status.MAX_ITERATIONS, x)


def _solve_anderson(
    problem: Problem, options: SolveOptions, x: np.ndarray, method: Method
) -> SolveReport:
    state = _RunState(options, method)
    depth = options.depth if options.depth is not None else options.maxit
    growing = _use_growing_engine(options, depth)
    window = HistoryWindow(max_entries=None if growing else depth + 1)
    engine = GrowingQr(problem.dimension, options.rank_tol) if growing else None

    f = problem.residual(x)
    norm = _norm(f)
    state.record(0, x, norm, real_norm=norm if options.trace_real_residuals else None)
    if not np.isfinite(norm):
        return state.finish(Status.NUMERICAL_FAILURE, x)
    if norm < options.tol:
        return state.finish(Status.CONVERGED, x)
    window.push(x, f)

    for k in range(1, options.maxit + 1):
        if k == 1:
            # The opening move is always the plain damped map.
            x_next = x + f
            coeffs = None
            fallback = False
        else:
            if engine is not None:
                gamma = engine.solve_gamma(f)
                alpha = gamma_to_alpha(gamma)
                coeffs = MixingCoefficients(alpha=alpha, gamma=gamma)
                mixed = window.residual_matrix() @ alpha
            else:
                coeffs, mixed = solve_mixing(window.residual_matrix())
            xbar = window.iterate_matrix() @ coeffs.alpha
            x_next = xbar + mixed
            fallback = coeffs.gamma.size > 0 and not np.any(coeffs.gamma)
        f_next = problem.residual(x_next)
        if engine is not None:
            engine.append(f_next - f)
        x, f = x_next, f_next
        window.push(x, f)
        norm = _norm(f)
        state.record(
            k,
            x,
            norm,
            real_norm=norm if options.trace_real_residuals else None,
            coeffs=coeffs,
            fallback=fallback,
        )
        if not np.isfinite(norm):
            return state.finish(Status.NUMERICAL_FAILURE, x)
        if norm < options.tol:
            return state.finish(Status.CONVERGED, x)
        if _stagnated(state.norms):
            return state.finish(Status.STAGNATION, x)
    return state.finish(Status.MAX_ITERATIONS, x)


def _solve_crop(
    problem: Problem,
    options: SolveOptions,
    x0: np.ndarray,
    method: Method,
    kind: str,
    mode: str,
) -> SolveReport:
    state = _RunState(options, method)
    depth = options.depth if options.depth is not None else options.maxit
    growing = _use_growing_engine(options, depth)
    window = HistoryWindow(max_entries=None if growing else depth)
    engine = GrowingQr(problem.dimension, options.rank_tol) if growing else None
    report_tilde = kind == "crop_anderson"
    mode_current = "control" if mode == "adaptive" else mode

    f0 = problem.residual(x0)
    f0_norm = _norm(f0)
    state.record(0, x0, f0_norm, real_norm=f0_norm if options.trace_real_residuals else None)
    if not np.isfinite(f0_norm):
        return state.finish(Status.NUMERICAL_FAILURE, x0)
    if f0_norm < options.tol:
        return state.finish(Status.CONVERGED, x0)
    window.push(x0, f0)
    solution = x0

    for k in range(options.maxit):
        x_last = window.iterate_cols[-1]
        f_last = window.residual_cols[-1]
        x_tilde = x_last + f_last
        f_tilde = problem.residual(x_tilde)
        tilde_norm = _norm(f_tilde)

        if report_tilde:
            solution = x_tilde
            row = state.record(
                k + 1,
                x_tilde,
                tilde_norm,
                real_norm=tilde_norm if options.trace_real_residuals else None,
            )
            if not np.isfinite(tilde_norm):
                return state.finish(Status.NUMERICAL_FAILURE, x_tilde)
            # Convergence of the reported sequence is tested before mixing.
            if tilde_norm < options.tol:
                return state.finish(Status.CONVERGED, x_tilde)
            if _stagnated(state.norms):
                return state.finish(Status.STAGNATION, x_tilde)
        elif not np.isfinite(tilde_norm):
            return state.finish(Status.NUMERICAL_FAILURE, x_tilde)

        if engine is not None:
            gamma = engine.solve_gamma(f_tilde, extra_col=f_tilde - f_last)
            alpha = gamma_to_alpha(gamma)
            coeffs = MixingCoefficients(alpha=alpha, gamma=gamma)
            f_ls = np.column_stack(window.residual_cols + [f_tilde])
            mixed = f_ls @ alpha
        else:
            f_ls = np.column_stack(window.residual_cols + [f_tilde])
            coeffs, mixed = solve_mixing(f_ls)
        x_ls = np.column_stack(window.iterate_cols + [x_tilde])
        x_next = x_ls @ coeffs.alpha

        real_norm: float | None = None
        if mode_current == "real":
            f_next = problem.residual(x_next)
            real_norm = _norm(f_next)
        else:
            f_next = mixed
            if mode == "adaptive" and (k + 1) % options.adaptive_period == 0:
                real_res = problem.residual(x_next)
                real_norm = _norm(real_res)
                mixed_norm = _norm(mixed)
                switch = True
                if mixed_norm > 0.0 and real_norm > 0.0:
                    switch = cos_theta(mixed, real_res) <= options.adaptive_cos_threshold
                elif real_norm == 0.0:
                    switch = False
                if switch:
                    mode_current = "real"
                    f_next = real_res

        if engine is not None:
            engine.append(f_next - f_last)
        window.push(x_next, f_next)
        norm_next = _norm(f_next)

        if report_tilde:
            row.gamma = coeffs.gamma.copy()
            row.alpha_last = float(coeffs.alpha[-1])
            if not np.isfinite(norm_next):
                return state.finish(Status.NUMERICAL_FAILURE, solution)
            continue

        solution = x_next
        if options.trace_real_residuals and real_norm is None:
            real_norm = _norm(problem.residual(x_next))
        state.record(k + 1, x_next, norm_next, real_norm=real_norm, coeffs=coeffs)
        if not np.isfinite(norm_next):
            return state.finish(Status.NUMERICAL_FAILURE, x_next)
        if mode_current != "real" and norm_next < options.breakdown_rel_tol * f0_norm:
            if real_norm is None:
                real_norm = _norm(problem.residual(x_next))
                state.trace[-1].real_res_norm = real_norm
            if real_norm >= options.tol:
                return state.finish(Status.BREAKDOWN, x_next)
            return state.finish(Status.CONVERGED, x_next)
        if norm_next < options.tol:
            return state.finish(Status.CONVERGED, x_next)
        if _stagnated(state.norms):
            return state.finish(Status.STAGNATION, x_next)
    return state.finish(Status.MAX_ITERATIONS, solution)
