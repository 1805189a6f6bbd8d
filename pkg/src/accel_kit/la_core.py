"""Dense kernels and the affine-constrained least-squares solve.

Every acceleration method in this package picks mixing weights ``alpha`` that
minimize the 2-norm of a combination of stored residual columns subject to the
weights summing to one.  Rewriting the weights in the affine frame turns that
constrained problem into an ordinary least-squares problem over consecutive
residual *differences*:

    minimize  || f_last - D @ gamma ||_2,   D[:, j] = F[:, j + 1] - F[:, j]

with the barycentric weights recovered as

    alpha[0] = gamma[0]
    alpha[i] = gamma[i] - gamma[i - 1]      (0 < i < m)
    alpha[m] = 1 - gamma[m - 1].

The unconstrained solve runs through a column-pivoted QR with a rank guard:
difference columns whose pivoted diagonal falls below ``rank_tol`` times the
leading one are dropped and receive a zero ``gamma`` entry, which keeps the
result deterministic on rank-deficient windows.  Windows with at most two
difference columns instead use the closed-form normal-equations solve; both
paths agree to well below the tolerances used by the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonFiniteInput

DEFAULT_RANK_TOL = 1e-12

__all__ = [
    "DEFAULT_RANK_TOL",
    "GrowingQr",
    "MixingCoefficients",
    "QrFactorization",
    "alpha_to_gamma",
    "gamma_to_alpha",
    "qr_factor",
    "solve_mixing",
    "solve_unconstrained_ls",
]


def _require_finite(name: str, array: np.ndarray) -> np.ndarray:
    array = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NonFiniteInput(f"{name} contains NaN or infinite entries")
    return array


@dataclass(frozen=True)
class QrFactorization:
    """Column-pivoted QR factorization ``M[:, col_perm] = q @ r``.

    ``numerical_rank`` counts the diagonal entries of ``r`` whose magnitude
    exceeds ``rank_tol`` times the leading diagonal entry; trailing pivoted
    columns below that threshold are treated as dependent.
    """

    q: np.ndarray
    r: np.ndarray
    col_perm: np.ndarray
    numerical_rank: int


@dataclass(frozen=True)
class MixingCoefficients:
    """Affine mixing weights in both frames.

    ``alpha`` holds the ``m + 1`` barycentric weights (summing to one) and
    ``gamma`` the ``m`` affine-frame weights attached to consecutive
    difference columns.
    """

    alpha: np.ndarray
    gamma: np.ndarray


def qr_factor(matrix: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> QrFactorization:
    """Factor a matrix with column pivoting and a relative rank guard.

    Wide inputs (more columns than rows, as produced by history windows deeper
    than the problem dimension) are allowed; the rank is then capped by the
    row count.
    """
    m = _require_finite("matrix", matrix)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array, got shape {m.shape}")
    rows, cols = m.shape
    if cols < 1 or rows < 1:
        raise DimensionMismatch(f"need rows >= 1 and cols >= 1, got {rows}x{cols}")
    q, r, perm = scipy.linalg.qr(m, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    lead = diag[0] if diag.size else 0.0
    if lead == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(diag > rank_tol * lead))
    return QrFactorization(q=q, r=r, col_perm=perm, numerical_rank=rank)


def solve_unconstrained_ls(
    basis: np.ndarray,
    rhs: np.ndarray,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> np.ndarray:
    """Minimize ``||rhs - basis @ gamma||_2`` over the full-rank column subset.

    Columns rejected by the rank guard get a zero ``gamma`` entry, so the
    returned vector always has one coefficient per basis column.
    """
    basis = _require_finite("basis", basis)
    rhs = _require_finite("rhs", rhs)
    if basis.ndim != 2 or basis.shape[1] < 1:
        raise DimensionMismatch(f"basis must have at least one column, got shape {basis.shape}")
    if rhs.shape != (basis.shape[0],):
        raise DimensionMismatch(
            f"rhs length {rhs.shape} does not match basis rows {basis.shape[0]}"
        )
    cols = basis.shape[1]
    if cols <= 2:
        gamma = _solve_small_ls(basis, rhs, rank_tol)
        if gamma is not None:
            return gamma
    return _solve_pivoted_ls(basis, rhs, rank_tol)


def _solve_small_ls(basis: np.ndarray, rhs: np.ndarray, rank_tol: float) -> np.ndarray | None:
    """Closed-form normal-equations solve for one or two columns.

    Returns None when the Gram matrix is too close to singular, in which case
    the caller falls back to the pivoted path and its column-drop rule.
    """
    cols = basis.shape[1]
    if cols == 1:
        c = basis[:, 0]
        nrm2 = float(c @ c)
        if nrm2 == 0.0:
            return np.zeros(1)
        return np.array([float(c @ rhs) / nrm2])
    g00 = float(basis[:, 0] @ basis[:, 0])
    g11 = float(basis[:, 1] @ basis[:, 1])
    g01 = float(basis[:, 0] @ basis[:, 1])
    det = g00 * g11 - g01 * g01
    # det = |R00|^2 * |R11|^2 for the pivoted QR of the pair, so this guard
    # matches the rank rule |R11| > rank_tol * |R00|.
    if det <= (rank_tol**2) * max(g00, g11) ** 2:
        return None
    d0 = float(basis[:, 0] @ rhs)
    d1 = float(basis[:, 1] @ rhs)
    return np.array([(g11 * d0 - g01 * d1) / det, (g00 * d1 - g01 * d0) / det])


def _solve_pivoted_ls(basis: np.ndarray, rhs: np.ndarray, rank_tol: float) -> np.ndarray:
    fac = qr_factor(basis, rank_tol)
    gamma = np.zeros(basis.shape[1])
    rank = fac.numerical_rank
    if rank == 0:
        return gamma
    qt_rhs = fac.q[:, :rank].T @ rhs
    coeffs = scipy.linalg.solve_triangular(fac.r[:rank, :rank], qt_rhs)
    gamma[fac.col_perm[:rank]] = coeffs
    return gamma


def gamma_to_alpha(gamma: np.ndarray) -> np.ndarray:
    """Convert affine-frame weights to barycentric weights summing to one."""
    gamma = np.asarray(gamma, dtype=np.float64)
    m = gamma.shape[0]
    alpha = np.empty(m + 1)
    alpha[0] = gamma[0] if m else 1.0
    if m:
        alpha[1:m] = gamma[1:] - gamma[:-1]
        alpha[m] = 1.0 - gamma[m - 1]
    return alpha


def alpha_to_gamma(alpha: np.ndarray) -> np.ndarray:
    """Inverse of :func:`gamma_to_alpha` (cumulative sums of ``alpha``)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return np.cumsum(alpha)[:-1]


def solve_mixing(residual_columns: np.ndarray) -> tuple[MixingCoefficients, np.ndarray]:
    """Pick weights minimizing the combined residual under the sum-to-one constraint.

    Returns the coefficients in both frames together with the mixed residual
    ``residual_columns @ alpha``.  With a single column the only feasible
    point is ``alpha = [1]``.
    """
    f = _require_finite("residual_columns", residual_columns)
    if f.ndim != 2 or f.shape[1] < 1:
        raise DimensionMismatch(f"need at least one residual column, got shape {f.shape}")
    if f.shape[1] == 1:
        coeffs = MixingCoefficients(alpha=np.ones(1), gamma=np.zeros(0))
        return coeffs, f[:, 0].copy()
    diffs = f[:, 1:] - f[:, :-1]
    gamma = solve_unconstrained_ls(diffs, f[:, -1])
    alpha = gamma_to_alpha(gamma)
    return MixingCoefficients(alpha=alpha, gamma=gamma), f @ alpha


class GrowingQr:
    """Append-only thin QR used by untruncated solver windows.

    Untruncated runs keep every difference column, so rebuilding a pivoted
    factorization each step would cost O(n k^2) per iteration.  This class
    instead extends an orthonormal basis by one column per step (twice
    re-orthogonalized Gram-Schmidt) and answers least-squares solves against
    the accumulated columns plus one optional transient trailing column.

    Columns whose orthogonalized remainder falls below ``rank_tol`` times the
    largest diagonal seen so far are recorded as dependent and always receive
    a zero coefficient, mirroring the drop rule of the pivoted path.
    """

    def __init__(self, rows: int, rank_tol: float = DEFAULT_RANK_TOL) -> None:
        self._rows = rows
        self._rank_tol = rank_tol
        self._q = np.empty((rows, 0))
        self._rcols: list[np.ndarray] = []
        self._slots: list[int | None] = []
        self._lead = 0.0

    @property
    def num_columns(self) -> int:
        return len(self._slots)

    def _orthogonalize(self, col: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        h = self._q.T @ col
        w = col - self._q @ h
        # One re-orthogonalization pass keeps the basis orthonormal to
        # machine precision even for nearly dependent columns.
        h2 = self._q.T @ w
        w = w - self._q @ h2
        h = h + h2
        return h, w, float(np.linalg.norm(w))

    def append(self, col: np.ndarray) -> None:
        col = _require_finite("column", col)
        if col.shape != (self._rows,):
            raise DimensionMismatch(f"expected column of length {self._rows}, got {col.shape}")
        h, w, wn = self._orthogonalize(col)
        if wn <= self._rank_tol * self._lead or (self._lead == 0.0 and wn == 0.0):
            self._slots.append(None)
            return
        self._lead = max(self._lead, wn)
        rank = self._q.shape[1]
        self._q = np.column_stack([self._q, w / wn])
        rcol = np.zeros(rank + 1)
        rcol[:rank] = h
        rcol[rank] = wn
        self._rcols.append(rcol)
        self._slots.append(rank)

    def solve_gamma(self, rhs: np.ndarray, extra_col: np.ndarray | None = None) -> np.ndarray:
        """Least-squares coefficients for all appended columns plus ``extra_col``.

        The returned vector has one entry per appended column (dropped columns
        get zero), followed by the coefficient of ``extra_col`` when given.
        """
        rhs = _require_finite("rhs", rhs)
        rank = self._q.shape[1]
        extra_used = False
        if extra_col is not None:
            extra_col = _require_finite("extra column", extra_col)
            h, w, wn = self._orthogonalize(extra_col)
            extra_used = wn > self._rank_tol * max(self._lead, wn)
        n_cols = len(self._slots) + (1 if extra_col is not None else 0)
        gamma = np.zeros(n_cols)
        dim = rank + (1 if extra_used else 0)
        if dim == 0:
            return gamma
        r = np.zeros((dim, dim))
        for j, rcol in enumerate(self._rcols):
            r[: j + 1, j] = rcol
        proj = np.empty(dim)
        proj[:rank] = self._q.T @ rhs
        if extra_used:
            r[:rank, rank] = h
            r[rank, rank] = wn
            proj[rank] = (w / wn) @ rhs
        coeffs = scipy.linalg.solve_triangular(r, proj)
        for idx, slot in enumerate(self._slots):
            if slot is not None:
                gamma[idx] = coeffs[slot]
        if extra_col is not None and extra_used:
            gamma[-1] = coeffs[rank]
        return gamma
