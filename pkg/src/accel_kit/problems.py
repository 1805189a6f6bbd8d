"""Benchmark fixed-point problems consumed by the accelerators.

Each problem bundles a residual ``f`` and the matching fixed-point map
``g(x) = x + f(x)`` (so ``f(x) = g(x) - x`` always holds), plus metadata the
harness and the Krylov reference solvers need.  The suite covers:

* ``linear_tridiag`` / ``linear_sevendiag`` -- 100-dimensional model systems
  ``A x = b`` with ``f(x) = b - A x`` and ``b = e_1``,
* ``linear_small2x2`` -- the 2x2 upper-triangular system used for convergence
  factor sweeps (``b = 0``),
* ``linear_custom`` -- any user-supplied matrix and right-hand side,
* ``dominant_linear`` -- a weakly nonlinear perturbation of the tridiagonal
  system, with the residual sign written as ``A x + (mu ||x||^2 / n) x - b``,
* ``small_nonlinear`` -- a two-dimensional quadratic map with root at zero,
* ``bratu`` -- the finite-difference Bratu problem on the unit square,
  applied matrix-free through the five-point stencil,
* ``delay_nep`` -- a 3x3 nonlinear eigenvalue problem from a distributed
  delay system, solved as a damped fixed-point iteration on ``[v; lambda]``.

Matrix Market coordinate files can be loaded into a sparse operator for
experiments on external matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import scipy.io
import scipy.sparse

from .errors import DimensionMismatch, InvalidSpec, ParseError, UnsupportedFormat

__all__ = [
    "DelayNepData",
    "LinearOperator",
    "Problem",
    "build_problem",
    "default_delay_nep_data",
    "evaluate_map_damped",
    "five_point_laplacian",
    "load_matrix_market",
    "nep_matrix",
    "operator_from_matrix",
]


@dataclass(frozen=True)
class LinearOperator:
    """A square linear map given by its action on vectors."""

    dimension: int
    apply: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.apply(v)

    def to_dense(self) -> np.ndarray:
        """Materialize the operator column by column (small dimensions only)."""
        eye = np.eye(self.dimension)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.dimension)])


@dataclass(frozen=True)
class Problem:
    """A fixed-point problem: find x with map(x) = x, i.e. residual(x) = 0.

    ``linear_operator`` and ``rhs`` are set for purely linear problems (where
    ``residual(x) = rhs - A x``) so reference Krylov solvers can run on the
    same data; they stay None otherwise.
    """

    dimension: int
    residual: Callable[[np.ndarray], np.ndarray]
    map: Callable[[np.ndarray], np.ndarray]
    label: str
    exact_solution: np.ndarray | None = None
    linear_operator: LinearOperator | None = None
    rhs: np.ndarray | None = None


@dataclass(frozen=True)
class DelayNepData:
    """Data of the distributed-delay eigenvalue problem.

    ``a0`` and ``a1`` are the tenth-scaled integer matrices of the delay
    system; ``fmat`` is the unscaled integer kernel matrix whose scalar
    profile ``(exp((s + 1/2)^2) - exp(1/4)) / 10`` carries the tenth scaling.
    The distributed term is integrated over ``[-tau, 0]`` with a fixed
    Gauss-Legendre rule of ``quad_nodes`` points.
    """

    a0: np.ndarray
    a1: np.ndarray
    fmat: np.ndarray
    tau: float = 1.0
    quad_nodes: int = 32
    normalization: np.ndarray = field(default_factory=lambda: np.ones(3))


def operator_from_matrix(matrix, description: str = "") -> LinearOperator:
    """Wrap a dense array or scipy sparse matrix as a LinearOperator."""
    if scipy.sparse.issparse(matrix):
        mat = matrix.tocsr()
        n, m = mat.shape
    else:
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D matrix, got shape {mat.shape}")
        n, m = mat.shape
    if n != m:
        raise DimensionMismatch(f"operator must be square, got {n}x{m}")
    return LinearOperator(dimension=n, apply=lambda v: mat @ v, description=description)


def _banded_matrix(n: int, offsets: list[int], values: list[float]) -> scipy.sparse.csr_matrix:
    diags = [np.full(n - abs(off), val) for off, val in zip(offsets, values) if val != 0.0]
    offs = [off for off, val in zip(offsets, values) if val != 0.0]
    return scipy.sparse.diags(diags, offs, shape=(n, n), format="csr")


def five_point_laplacian(grid: int) -> LinearOperator:
    """Matrix-free five-point stencil (-4 on the diagonal, +1 for neighbors)
    on a ``grid x grid`` interior mesh with zero boundary values."""
    if grid < 1:
        raise InvalidSpec(f"grid must be positive, got {grid}")
    n = grid * grid

    def apply(x: np.ndarray) -> np.ndarray:
        u = x.reshape(grid, grid)
        out = -4.0 * u
        out[1:, :] += u[:-1, :]
        out[:-1, :] += u[1:, :]
        out[:, 1:] += u[:, :-1]
        out[:, :-1] += u[:, 1:]
        return out.reshape(n)

    return LinearOperator(dimension=n, apply=apply, description=f"five-point stencil {grid}x{grid}")


def default_delay_nep_data(tau: float = 1.0, quad_nodes: int = 32) -> DelayNepData:
    a0 = np.array([[25.0, 28.0, -5.0], [18.0, 3.0, 3.0], [-23.0, -14.0, 35.0]]) / 10.0
    a1 = np.array([[17.0, 7.0, -3.0], [-24.0, -21.0, -2.0], [20.0, 7.0, 4.0]]) / 10.0
    fmat = np.array([[14.0, -13.0, 4.0], [14.0, 7.0, 10.0], [6.0, 16.0, 17.0]])
    if quad_nodes < 8:
        raise InvalidSpec(f"quad_nodes must be at least 8, got {quad_nodes}")
    return DelayNepData(a0=a0, a1=a1, fmat=fmat, tau=tau, quad_nodes=quad_nodes)


def nep_matrix(data: DelayNepData, lam: float) -> np.ndarray:
    """Evaluate M(lambda) = -lambda I + A0 + A1 exp(-lambda tau) + integral term.

    The distributed term integrates ``F(s) exp(lambda s)`` over ``[-tau, 0]``
    with a fixed Gauss-Legendre rule, where ``F(s)`` is ``fmat`` scaled by
    ``(exp((s + 1/2)^2) - exp(1/4)) / 10``.
    """
    nodes, weights = np.polynomial.legendre.leggauss(data.quad_nodes)
    half = data.tau / 2.0
    s = half * nodes - half  # map [-1, 1] onto [-tau, 0]
    profile = (np.exp((s + 0.5) ** 2) - np.exp(0.25)) / 10.0
    scalar = half * float(np.sum(weights * profile * np.exp(lam * s)))
    return -lam * np.eye(3) + data.a0 + data.a1 * np.exp(-lam * data.tau) + scalar * data.fmat


def _linear_problem(op: LinearOperator, b: np.ndarray, label: str,
                    exact: np.ndarray | None = None) -> Problem:
    def residual(x: np.ndarray) -> np.ndarray:
        return b - op.apply(x)

    def fixed_point(x: np.ndarray) -> np.ndarray:
        return x + residual(x)

    return Problem(
        dimension=op.dimension,
        residual=residual,
        map=fixed_point,
        label=label,
        exact_solution=exact,
        linear_operator=op,
        rhs=b,
    )


def _unit_rhs(n: int) -> np.ndarray:
    b = np.zeros(n)
    b[0] = 1.0
    return b


def _require_size(params: Mapping, key: str = "n") -> int:
    n = params.get(key)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InvalidSpec(f"problem needs a positive integer '{key}', got {n!r}")
    return n


def build_problem(spec: Mapping | str, **params) -> Problem:
    """Build a benchmark problem from an identifier and parameters.

    ``spec`` is either the identifier string or a mapping with an ``id`` key
    (extra keys are treated as parameters, as in experiment config files).
    """
    if isinstance(spec, str):
        merged: dict = dict(params)
        ident = spec
    elif isinstance(spec, Mapping):
        merged = {k: v for k, v in spec.items() if k != "id"}
        merged.update(params)
        ident = spec.get("id", "")
    else:
        raise InvalidSpec(f"problem spec must be a string or mapping, got {type(spec)!r}")

    builder = _BUILDERS.get(ident)
    if builder is None:
        known = ", ".join(sorted(_BUILDERS))
        raise InvalidSpec(f"unknown problem id {ident!r} (known: {known})")
    return builder(merged)


def _build_linear_tridiag(params: Mapping) -> Problem:
    n = _require_size(params)
    op = operator_from_matrix(_banded_matrix(n, [-1, 0, 1], [1.0, -4.0, 1.0]),
                              description=f"tridiag(1,-4,1) n={n}")
    return _linear_problem(op, _unit_rhs(n), f"linear_tridiag(n={n})")


def _build_linear_sevendiag(params: Mapping) -> Problem:
    n = _require_size(params)
    op = operator_from_matrix(
        _banded_matrix(n, [-3, -2, -1, 0, 1, 2, 3], [0.0, 0.0, 1.0, -4.0, 1.0, 1.0, 1.0]),
        description=f"sevendiag(0,0,1,-4,1,1,1) n={n}",
    )
    return _linear_problem(op, _unit_rhs(n), f"linear_sevendiag(n={n})")


def _build_linear_small2x2(params: Mapping) -> Problem:
    a = np.array([[1.0 / 3.0, -1.0 / 4.0], [0.0, 2.0 / 3.0]])
    op = operator_from_matrix(a, description="upper-triangular 2x2")
    return _linear_problem(op, np.zeros(2), "linear_small2x2", exact=np.zeros(2))


def _build_linear_custom(params: Mapping) -> Problem:
    if "a" not in params or "b" not in params:
        raise InvalidSpec("linear_custom needs 'a' (matrix) and 'b' (vector)")
    a = params["a"]
    op = a if isinstance(a, LinearOperator) else operator_from_matrix(a, "custom")
    b = np.asarray(params["b"], dtype=np.float64)
    if b.shape != (op.dimension,):
        raise InvalidSpec(f"rhs length {b.shape} does not match dimension {op.dimension}")
    return _linear_problem(op, b, f"linear_custom(n={op.dimension})")


def _build_dominant_linear(params: Mapping) -> Problem:
    n = _require_size(params)
    mu = float(params.get("mu", 0.01))
    op = operator_from_matrix(_banded_matrix(n, [-1, 0, 1], [1.0, -4.0, 1.0]))
    b = _unit_rhs(n)

    # Residual sign kept exactly as the benchmark defines it: f(0) = -b.
    def residual(x: np.ndarray) -> np.ndarray:
        return op.apply(x) + (mu * float(x @ x) / n) * x - b

    def fixed_point(x: np.ndarray) -> np.ndarray:
        return x + residual(x)

    return Problem(
        dimension=n,
        residual=residual,
        map=fixed_point,
        label=f"dominant_linear(n={n}, mu={mu})",
    )


def _build_small_nonlinear(params: Mapping) -> Problem:
    def fixed_point(x: np.ndarray) -> np.ndarray:
        return 0.5 * np.array([x[0] + x[0] ** 2 + x[1] ** 2, x[1] + x[0] ** 2])

    def residual(x: np.ndarray) -> np.ndarray:
        return fixed_point(x) - x

    return Problem(
        dimension=2,
        residual=residual,
        map=fixed_point,
        label="small_nonlinear",
        exact_solution=np.zeros(2),
    )


def _build_bratu(params: Mapping) -> Problem:
    grid = _require_size(params, "grid")
    lam = float(params.get("lambda", params.get("lam", 0.5)))
    lap = five_point_laplacian(grid)
    h = 1.0 / (grid + 1)
    scale = h * h * lam

    def residual(x: np.ndarray) -> np.ndarray:
        return lap.apply(x) + scale * np.exp(x)

    def fixed_point(x: np.ndarray) -> np.ndarray:
        return x + residual(x)

    return Problem(
        dimension=grid * grid,
        residual=residual,
        map=fixed_point,
        label=f"bratu(grid={grid}, lambda={lam})",
    )


def _build_delay_nep(params: Mapping) -> Problem:
    beta = float(params.get("beta", 0.1))
    if beta <= 0.0:
        raise InvalidSpec(f"delay_nep damping must be positive, got {beta}")
    tau = float(params.get("tau", 1.0))
    quad_nodes = int(params.get("quad_nodes", 32))
    data = default_delay_nep_data(tau=tau, quad_nodes=quad_nodes)
    c = data.normalization

    # The eigenproblem residual [M(lambda) v; c.v - 1] enters the fixed-point
    # formulation damped by beta, so that map(x) - x = residual(x) holds.
    def residual(x: np.ndarray) -> np.ndarray:
        v, lam = x[:3], x[3]
        raw = np.empty(4)
        raw[:3] = nep_matrix(data, lam) @ v
        raw[3] = c @ v - 1.0
        return beta * raw

    def fixed_point(x: np.ndarray) -> np.ndarray:
        return x + residual(x)

    return Problem(
        dimension=4,
        residual=residual,
        map=fixed_point,
        label=f"delay_nep(beta={beta})",
    )


_BUILDERS = {
    "linear_tridiag": _build_linear_tridiag,
    "linear_sevendiag": _build_linear_sevendiag,
    "linear_small2x2": _build_linear_small2x2,
    "linear_custom": _build_linear_custom,
    "dominant_linear": _build_dominant_linear,
    "small_nonlinear": _build_small_nonlinear,
    "bratu": _build_bratu,
    "delay_nep": _build_delay_nep,
}


def evaluate_map_damped(problem: Problem, x: np.ndarray, beta: float) -> np.ndarray:
    """Damped fixed-point map ``x + beta * residual(x)``; equals map(x) at beta = 1."""
    if beta <= 0.0:
        raise InvalidSpec(f"beta must be positive, got {beta}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.dimension,):
        raise DimensionMismatch(
            f"x has length {x.shape}, problem dimension is {problem.dimension}"
        )
    return x + beta * problem.residual(x)


def load_matrix_market(path) -> LinearOperator:
    """Load a real coordinate Matrix Market file as a sparse operator.

    Symmetric storage is expanded, indices are converted from the 1-based file
    format.  Complex and pattern fields, array format, and non-square shapes
    are rejected as unsupported.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        rows, cols, _entries, fmt, fieldkind, _symm = scipy.io.mminfo(path)
    except OSError:
        raise
    except Exception as exc:
        raise ParseError(f"cannot parse Matrix Market header of {path}: {exc}") from exc
    if fmt != "coordinate":
        raise UnsupportedFormat(f"only coordinate format is supported, got {fmt!r}")
    if fieldkind in ("complex", "pattern"):
        raise UnsupportedFormat(f"field {fieldkind!r} is not supported")
    if rows != cols:
        raise UnsupportedFormat(f"operator must be square, got {rows}x{cols}")
    try:
        matrix = scipy.io.mmread(path)
    except Exception as exc:
        raise ParseError(f"cannot parse Matrix Market entries of {path}: {exc}") from exc
    return operator_from_matrix(
        scipy.sparse.csr_matrix(matrix, dtype=np.float64),
        description=f"matrix market {path}",
    )
