"""Structural identities between the mixing methods.

Untruncated, with unit damping, the optimal-trial-vector recursion reported at
its preliminary iterates reproduces Anderson mixing exactly; the QR-based
steps match the explicit pseudoinverse update formulas; and the depth-1
recursion is a genuine fixed-point iteration in its (iterate, residual) pair.
"""

import numpy as np
import pytest

from accel_kit.accel import (
    HistoryWindow,
    SolveOptions,
    Status,
    anderson_step,
    approx_inverse_jacobian,
    crop_step,
    solve,
)
from accel_kit.la_core import gamma_to_alpha
from accel_kit.problems import Problem, build_problem


def _random_linear(seed, n=10, scale=0.3):
    rng = np.random.default_rng(seed)
    a = np.eye(n) + scale * rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    return build_problem({"id": "linear_custom", "a": a, "b": b})


def _rel_gap(x, y):
    return np.linalg.norm(x - y) / (1.0 + np.linalg.norm(x))


# ---------------------------------------------------------------------------
# Untruncated Anderson == preliminary-iterate stream of the mixing recursion
# ---------------------------------------------------------------------------


def test_untruncated_anderson_matches_crop_anderson_on_linear_systems():
    for seed in range(10):
        problem = _random_linear(seed)
        opts = SolveOptions(tol=1e-10, maxit=60, keep_iterates=True)
        anderson = solve(problem, "anderson", opts)
        tilde = solve(problem, "crop_anderson", opts)
        for xa, xc in zip(anderson.iterates, tilde.iterates):
            assert _rel_gap(xa, xc) <= 1e-8


def test_untruncated_anderson_matches_crop_anderson_before_breakdown():
    problem = build_problem("small_nonlinear")
    x0 = np.array([0.1, 0.1])
    opts = SolveOptions(tol=1e-10, maxit=100, keep_iterates=True)
    anderson = solve(problem, "anderson", opts, x0=x0)
    tilde = solve(problem, "crop_anderson", opts, x0=x0)
    crop = solve(problem, "crop", opts, x0=x0)
    assert crop.status is Status.BREAKDOWN
    for k in range(crop.iterations + 1):
        assert _rel_gap(anderson.iterates[k], tilde.iterates[k]) <= 1e-8


def test_crop_iterates_match_anderson_averages():
    # The accepted iterates of the mixing recursion equal the weighted
    # averages formed inside the Anderson step, reconstructed from the
    # recorded affine weights.
    problem = _random_linear(99, n=8)
    opts = SolveOptions(tol=1e-10, maxit=40, keep_iterates=True)
    anderson = solve(problem, "anderson", opts)
    crop = solve(problem, "crop", opts)
    for k in range(1, min(anderson.iterations, crop.iterations)):
        row = anderson.trace[k + 1] if k + 1 <= anderson.iterations else None
        if row is None or row.gamma is None:
            continue
        alpha = gamma_to_alpha(row.gamma)
        xbar = np.column_stack(anderson.iterates[: k + 1]) @ alpha
        assert _rel_gap(crop.iterates[k], xbar) <= 1e-8


# ---------------------------------------------------------------------------
# Explicit pseudoinverse update formulas
# ---------------------------------------------------------------------------


def _window_from(rng, n, entries):
    window = HistoryWindow()
    for _ in range(entries):
        window.push(rng.standard_normal(n), rng.standard_normal(n))
    return window


@pytest.mark.parametrize("entries", [2, 3, 4])
def test_anderson_step_matches_pseudoinverse_formula(entries):
    rng = np.random.default_rng(entries)
    beta = 0.8
    for _ in range(40):
        window = _window_from(rng, 6, entries)
        x = window.iterate_matrix()
        f = window.residual_matrix()
        dx, df = np.diff(x, axis=1), np.diff(f, axis=1)
        fk = f[:, -1]
        gamma = np.linalg.solve(df.T @ df, df.T @ fk)
        expected = x[:, -1] + beta * fk - (dx + beta * df) @ gamma
        np.testing.assert_allclose(anderson_step(window, beta), expected, atol=1e-9)


@pytest.mark.parametrize("entries", [1, 2, 3])
def test_crop_step_matches_pseudoinverse_formula(entries):
    problem = _random_linear(800, n=6)
    rng = np.random.default_rng(10 + entries)
    for _ in range(40):
        window = _window_from(rng, 6, entries)
        x_next, _, x_tilde, f_tilde = crop_step(window, problem)
        x_ls = np.column_stack(window.iterate_cols + [x_tilde])
        f_ls = np.column_stack(window.residual_cols + [f_tilde])
        dx, df = np.diff(x_ls, axis=1), np.diff(f_ls, axis=1)
        gamma = np.linalg.solve(df.T @ df, df.T @ f_tilde)
        expected = x_tilde - dx @ gamma
        np.testing.assert_allclose(x_next, expected, atol=1e-9)


def test_crop_step_matches_multisecant_update():
    problem = _random_linear(801, n=6)
    rng = np.random.default_rng(31)
    for _ in range(100):
        window = _window_from(rng, 6, 3)
        x_next, _, x_tilde, f_tilde = crop_step(window, problem)
        ls_window = HistoryWindow()
        for x, f in zip(window.iterate_cols, window.residual_cols):
            ls_window.push(x, f)
        ls_window.push(x_tilde, f_tilde)
        g = approx_inverse_jacobian(ls_window, "crop")
        np.testing.assert_allclose(x_next, x_tilde - g @ f_tilde, atol=1e-9)


# ---------------------------------------------------------------------------
# Linear problems: the mixed residual stays the true residual
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("m", [1, 2, 5, None])
def test_control_residual_equals_true_residual_on_linear_problems(m):
    for problem in (
        build_problem({"id": "linear_tridiag", "n": 60}),
        build_problem({"id": "linear_sevendiag", "n": 60}),
        _random_linear(3, n=15),
    ):
        op, b = problem.linear_operator, problem.rhs
        window = HistoryWindow(max_entries=m)
        x = np.zeros(problem.dimension)
        f = problem.residual(x)
        window.push(x, f)
        for _ in range(25):
            x_next, f_next, x_tilde, f_tilde = crop_step(window, problem)
            gap = np.linalg.norm(f_tilde - (f - op.apply(f)))
            assert gap <= 1e-10 * max(np.linalg.norm(b), 1.0)
            window.push(x_next, f_next)
            true_residual = b - op.apply(x_next)
            assert np.linalg.norm(f_next - true_residual) <= 1e-10 * max(np.linalg.norm(b), 1.0)
            f = f_next
            if np.linalg.norm(f_next) < 1e-11:
                break


# ---------------------------------------------------------------------------
# Depth-1 recursion is a fixed-point iteration in its (x, f) state
# ---------------------------------------------------------------------------


def test_depth1_crop_restarts_bit_for_bit():
    problem = build_problem({"id": "dominant_linear", "n": 20})
    x = np.zeros(20)
    f = problem.residual(x)
    states = [(x, f)]
    for _ in range(12):
        window = HistoryWindow(max_entries=1)
        window.push(*states[-1])
        x_next, f_next, _, _ = crop_step(window, problem)
        states.append((x_next, f_next))
    for start in (3, 7):
        replay = [states[start]]
        for _ in range(12 - start):
            window = HistoryWindow(max_entries=1)
            window.push(*replay[-1])
            replay.append(crop_step(window, problem)[:2])
        for (x_a, f_a), (x_b, f_b) in zip(states[start:], replay):
            assert np.array_equal(x_a, x_b)
            assert np.array_equal(f_a, f_b)


# ---------------------------------------------------------------------------
# Damping reduction and least-squares strategies
# ---------------------------------------------------------------------------


def test_anderson_damping_equals_damped_map_exactly():
    base = build_problem("small_nonlinear")
    beta = 0.4

    def damped_residual(x):
        return beta * base.residual(x)

    damped = Problem(
        dimension=2,
        residual=damped_residual,
        map=lambda x: x + damped_residual(x),
        label="damped",
    )
    opts_beta = SolveOptions(depth=2, beta=beta, tol=1e-10, maxit=60, keep_iterates=True)
    opts_unit = SolveOptions(depth=2, beta=1.0, tol=1e-10, maxit=60, keep_iterates=True)
    x0 = np.array([0.1, 0.1])
    run_beta = solve(base, "anderson", opts_beta, x0=x0)
    run_unit = solve(damped, "anderson", opts_unit, x0=x0)
    assert run_beta.iterations == run_unit.iterations
    for xa, xb in zip(run_beta.iterates, run_unit.iterates):
        assert np.array_equal(xa, xb)


@pytest.mark.parametrize("method", ["anderson", "crop", "crop_anderson"])
def test_growing_ls_engine_matches_per_step_rebuild(method):
    problem = _random_linear(17, n=12)
    opts_auto = SolveOptions(tol=1e-10, maxit=40, keep_iterates=True)
    opts_rebuild = SolveOptions(tol=1e-10, maxit=40, keep_iterates=True, ls_strategy="rebuild")
    fast = solve(problem, method, opts_auto)
    slow = solve(problem, method, opts_rebuild)
    assert fast.iterations == slow.iterations
    for row_fast, row_slow in zip(fast.trace, slow.trace):
        if row_fast.gamma is None or row_slow.gamma is None:
            assert row_fast.gamma is None and row_slow.gamma is None
            continue
        np.testing.assert_allclose(row_fast.gamma, row_slow.gamma, atol=1e-10)
    for xa, xb in zip(fast.iterates, slow.iterates):
        assert _rel_gap(xa, xb) <= 1e-10
