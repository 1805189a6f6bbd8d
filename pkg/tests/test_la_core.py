import numpy as np
import pytest

from accel_kit.errors import DimensionMismatch, NonFiniteInput
from accel_kit.la_core import (
    GrowingQr,
    alpha_to_gamma,
    gamma_to_alpha,
    qr_factor,
    solve_mixing,
    solve_unconstrained_ls,
    _solve_pivoted_ls,
    _solve_small_ls,
)


def test_qr_factor_identity():
    fac = qr_factor(np.eye(3), rank_tol=1e-12)
    assert fac.numerical_rank == 3
    np.testing.assert_allclose(np.abs(np.diag(fac.r)), np.ones(3), atol=1e-15)
    np.testing.assert_allclose(fac.q @ fac.r, np.eye(3)[:, fac.col_perm], atol=1e-14)


def test_qr_factor_duplicate_column_is_rank_one():
    v = np.array([1.0, 2.0, -1.0])
    fac = qr_factor(np.column_stack([v, v]))
    assert fac.numerical_rank == 1


def test_qr_factor_reconstructs_and_is_orthonormal():
    rng = np.random.default_rng(42)
    m = rng.standard_normal((6, 3))
    fac = qr_factor(m)
    recon = fac.q @ fac.r
    assert np.linalg.norm(recon - m[:, fac.col_perm]) <= 1e-10 * np.linalg.norm(m)
    gram = fac.q.T @ fac.q
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-12


def test_qr_factor_rejects_nonfinite():
    bad = np.array([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(NonFiniteInput):
        qr_factor(bad)


def test_qr_factor_accepts_wide_matrices():
    rng = np.random.default_rng(3)
    fac = qr_factor(rng.standard_normal((3, 5)))
    assert fac.numerical_rank == 3


def test_unconstrained_ls_exact_single_column():
    rhs = np.array([1.0, -2.0, 0.5])
    gamma = solve_unconstrained_ls(rhs.reshape(-1, 1), rhs)
    np.testing.assert_allclose(gamma, [1.0], atol=1e-14)


def test_unconstrained_ls_orthonormal_basis():
    basis = np.eye(2)
    gamma = solve_unconstrained_ls(basis, np.array([3.0, 4.0]))
    np.testing.assert_allclose(gamma, [3.0, 4.0], atol=1e-14)


def test_unconstrained_ls_matches_normal_equations():
    rng = np.random.default_rng(7)
    basis = rng.standard_normal((8, 3))
    rhs = rng.standard_normal(8)
    gamma = solve_unconstrained_ls(basis, rhs)
    oracle = np.linalg.solve(basis.T @ basis, basis.T @ rhs)
    np.testing.assert_allclose(gamma, oracle, atol=1e-10)
    residual = rhs - basis @ gamma
    assert np.max(np.abs(basis.T @ residual)) <= 1e-8 * np.linalg.norm(rhs)


def test_unconstrained_ls_zeroes_dropped_columns():
    rng = np.random.default_rng(11)
    col = rng.standard_normal(5)
    basis = np.column_stack([col, 2.0 * col, rng.standard_normal(5)])
    rhs = rng.standard_normal(5)
    gamma = solve_unconstrained_ls(basis, rhs)
    # one of the two parallel columns must carry zero weight
    assert gamma[0] == 0.0 or gamma[1] == 0.0
    residual = rhs - basis @ gamma
    retained = [i for i in range(3) if gamma[i] != 0.0]
    for i in retained:
        assert abs(basis[:, i] @ residual) <= 1e-8 * np.linalg.norm(rhs)


def test_unconstrained_ls_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        solve_unconstrained_ls(np.eye(3), np.ones(2))


@pytest.mark.parametrize("cols", [1, 2])
def test_small_ls_fast_path_matches_pivoted(cols):
    rng = np.random.default_rng(100 + cols)
    for _ in range(25):
        basis = rng.standard_normal((6, cols))
        rhs = rng.standard_normal(6)
        fast = _solve_small_ls(basis, rhs, 1e-12)
        slow = _solve_pivoted_ls(basis, rhs, 1e-12)
        assert fast is not None
        np.testing.assert_allclose(fast, slow, atol=1e-10)


def test_small_ls_falls_back_on_singular_pair():
    col = np.array([1.0, 1.0, 0.0])
    basis = np.column_stack([col, col])
    assert _solve_small_ls(basis, np.ones(3), 1e-12) is None


def test_gamma_to_alpha_cases():
    np.testing.assert_allclose(gamma_to_alpha(np.array([])), [1.0])
    np.testing.assert_allclose(gamma_to_alpha(np.array([0.3])), [0.3, 0.7], atol=1e-15)
    np.testing.assert_allclose(gamma_to_alpha(np.array([0.2, 0.5])), [0.2, 0.3, 0.5], atol=1e-15)


def test_gamma_alpha_roundtrip_and_sum():
    rng = np.random.default_rng(5)
    for m in (0, 1, 2, 5, 9):
        gamma = rng.standard_normal(m)
        alpha = gamma_to_alpha(gamma)
        assert abs(alpha.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(alpha_to_gamma(alpha), gamma, atol=1e-14)


def test_solve_mixing_single_column():
    f = np.array([1.0, -1.0])
    coeffs, mixed = solve_mixing(f.reshape(-1, 1))
    np.testing.assert_allclose(coeffs.alpha, [1.0])
    np.testing.assert_allclose(mixed, f)


def test_solve_mixing_symmetric_pair():
    cols = np.column_stack([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    coeffs, mixed = solve_mixing(cols)
    np.testing.assert_allclose(coeffs.alpha, [0.5, 0.5], atol=1e-14)
    assert abs(np.linalg.norm(mixed) - np.sqrt(2) / 2) <= 1e-14


@pytest.mark.parametrize("zero_pos", [0, 1, 2])
def test_solve_mixing_zero_column_is_exact_minimizer(zero_pos):
    rng = np.random.default_rng(20 + zero_pos)
    cols = [rng.standard_normal(4) for _ in range(3)]
    cols[zero_pos] = np.zeros(4)
    coeffs, mixed = solve_mixing(np.column_stack(cols))
    expected = np.zeros(3)
    expected[zero_pos] = 1.0
    np.testing.assert_allclose(coeffs.alpha, expected, atol=1e-12)
    assert np.linalg.norm(mixed) <= 1e-12


def test_solve_mixing_optimality_and_orthogonality():
    rng = np.random.default_rng(33)
    for _ in range(30):
        f = rng.standard_normal((7, 4))
        coeffs, mixed = solve_mixing(f)
        assert abs(coeffs.alpha.sum() - 1.0) <= 1e-12
        mixed_norm = np.linalg.norm(mixed)
        for j in range(f.shape[1]):
            assert mixed_norm <= np.linalg.norm(f[:, j]) * (1.0 + 1e-12)
        diffs = f[:, 1:] - f[:, :-1]
        bound = 1e-8 * np.linalg.norm(f) * max(np.linalg.norm(coeffs.alpha), 1.0)
        assert np.max(np.abs(diffs.T @ mixed)) <= bound


def test_solve_mixing_two_columns_matches_closed_form():
    rng = np.random.default_rng(77)
    for _ in range(50):
        f = rng.standard_normal((5, 2))
        coeffs, mixed = solve_mixing(f)
        delta = f[:, 1] - f[:, 0]
        gamma_star = float(delta @ f[:, 1]) / float(delta @ delta)
        np.testing.assert_allclose(coeffs.gamma, [gamma_star], atol=1e-10)
        np.testing.assert_allclose(mixed, f[:, 1] - gamma_star * delta, atol=1e-10)


def test_growing_qr_matches_batch_solver():
    rng = np.random.default_rng(55)
    n = 12
    engine = GrowingQr(n)
    cols = []
    for step in range(8):
        new_col = rng.standard_normal(n)
        engine.append(new_col)
        cols.append(new_col)
        rhs = rng.standard_normal(n)
        basis = np.column_stack(cols)
        np.testing.assert_allclose(
            engine.solve_gamma(rhs),
            solve_unconstrained_ls(basis, rhs),
            atol=1e-10,
        )
        extra = rng.standard_normal(n)
        np.testing.assert_allclose(
            engine.solve_gamma(rhs, extra_col=extra),
            solve_unconstrained_ls(np.column_stack(cols + [extra]), rhs),
            atol=1e-10,
        )


def test_growing_qr_drops_dependent_columns():
    engine = GrowingQr(4)
    base = np.array([1.0, 0.0, 0.0, 0.0])
    engine.append(base)
    engine.append(2.0 * base)
    rhs = np.array([3.0, 1.0, 0.0, 0.0])
    gamma = engine.solve_gamma(rhs)
    assert gamma[1] == 0.0
    np.testing.assert_allclose(gamma[0], 3.0, atol=1e-12)
