"""Reference Krylov solvers used as independent oracles.

These implementations exist to cross-check the acceleration methods on linear
problems, where the mixing recursions coincide with classical Krylov schemes:
the untruncated optimal-trial-vector recursion matches unrestarted GMRES, and
its depth-m truncation matches the truncated generalized conjugate residual
method keeping m - 1 directions.  All three solvers record per-iteration
residual norms and iterates so traces can be compared step by step.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotSymmetric
from .problems import LinearOperator

__all__ = ["KrylovStatus", "KrylovTrace", "cr_solve", "gmres_solve", "orthomin_solve"]


class KrylovStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    STALLED = "Stalled"


@dataclass
class KrylovTrace:
    """Per-iteration history of a Krylov run."""

    residual_norms: list[float]
    iterates: list[np.ndarray]
    status: KrylovStatus


def gmres_solve(
    a: LinearOperator,
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    maxit: int | None = None,
) -> tuple[np.ndarray, KrylovTrace]:
    """Unrestarted GMRES with modified Gram-Schmidt and Givens rotations.

    At every step the recorded residual norm is the minimum of ``||b - A x||``
    over the affine Krylov space built so far; the iterate achieving it is
    formed explicitly each step so traces expose the full history.
    """
    n = a.dimension
    b = np.asarray(b, dtype=np.float64)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64)
    maxit = n if maxit is None else min(maxit, n)

    r0 = b - a.apply(x0)
    beta = float(np.linalg.norm(r0))
    norms = [beta]
    iterates = [x0.copy()]
    if beta < tol:
        return x0.copy(), KrylovTrace(norms, iterates, KrylovStatus.CONVERGED)

    basis = [r0 / beta]
    h = np.zeros((maxit + 1, maxit))
    cs = np.zeros(maxit)
    sn = np.zeros(maxit)
    g = np.zeros(maxit + 1)
    g[0] = beta

    def assemble(k: int) -> np.ndarray:
        y = np.linalg.solve(np.triu(h[: k + 1, : k + 1]), g[: k + 1])
        return x0 + np.column_stack(basis[: k + 1]) @ y

    status = KrylovStatus.MAX_ITERATIONS
    for k in range(maxit):
        w = a.apply(basis[k])
        for j in range(k + 1):
            h[j, k] = basis[j] @ w
            w = w - h[j, k] * basis[j]
        h[k + 1, k] = float(np.linalg.norm(w))
        happy = h[k + 1, k] <= 1e-14 * beta
        if not happy:
            basis.append(w / h[k + 1, k])
        # Apply the accumulated rotations, then a new one zeroing h[k+1, k].
        for j in range(k):
            temp = cs[j] * h[j, k] + sn[j] * h[j + 1, k]
            h[j + 1, k] = -sn[j] * h[j, k] + cs[j] * h[j + 1, k]
            h[j, k] = temp
        denom = float(np.hypot(h[k, k], h[k + 1, k]))
        if denom == 0.0:
            status = KrylovStatus.STALLED
            break
        cs[k] = h[k, k] / denom
        sn[k] = h[k + 1, k] / denom
        h[k, k] = denom
        h[k + 1, k] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        norms.append(abs(float(g[k + 1])))
        iterates.append(assemble(k))
        if norms[-1] < tol:
            status = KrylovStatus.CONVERGED
            break
        if happy:
            status = KrylovStatus.STALLED
            break
    return iterates[-1].copy(), KrylovTrace(norms, iterates, status)


def orthomin_solve(
    a: LinearOperator,
    b: np.ndarray,
    x0: np.ndarray | None = None,
    m: int = 1,
    tol: float = 1e-10,
    maxit: int = 100,
) -> tuple[np.ndarray, KrylovTrace]:
    """Truncated generalized conjugate residual iteration keeping m directions.

    Each step orthogonalizes ``A r`` against the last m stored ``A p``
    directions, then minimizes the residual along the resulting direction.
    With ``m = 0`` no directions are kept (the plain minimal-residual step);
    with ``m >= n`` the method reproduces unrestarted GMRES residual norms.
    """
    if m < 0:
        raise ValueError(f"direction count must be nonnegative, got {m}")
    n = a.dimension
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()

    r = b - a.apply(x)
    norms = [float(np.linalg.norm(r))]
    iterates = [x.copy()]
    dirs: list[tuple[np.ndarray, np.ndarray, float]] = []  # (p, Ap, ||Ap||^2)

    status = KrylovStatus.MAX_ITERATIONS
    for _ in range(maxit):
        if norms[-1] < tol:
            status = KrylovStatus.CONVERGED
            break
        p = r.copy()
        ap = a.apply(r)
        for pj, apj, apj2 in dirs:
            c = float(ap @ apj) / apj2
            p -= c * pj
            ap -= c * apj
        ap2 = float(ap @ ap)
        if ap2 <= (1e-14 * norms[0]) ** 2:
            status = KrylovStatus.STALLED
            break
        alpha = float(r @ ap) / ap2
        x += alpha * p
        r -= alpha * ap
        if m > 0:
            dirs.append((p, ap, ap2))
            if len(dirs) > m:
                dirs.pop(0)
        norms.append(float(np.linalg.norm(r)))
        iterates.append(x.copy())
    else:
        if norms[-1] < tol:
            status = KrylovStatus.CONVERGED
    return x.copy(), KrylovTrace(norms, iterates, status)


def _probe_symmetry(a: LinearOperator, pairs: int = 5, rel_tol: float = 1e-10) -> None:
    rng = np.random.default_rng(2718281828)
    for _ in range(pairs):
        u = rng.standard_normal(a.dimension)
        v = rng.standard_normal(a.dimension)
        au = a.apply(u)
        av = a.apply(v)
        lhs = float(u @ av)
        rhs = float(v @ au)
        scale = max(np.linalg.norm(u) * np.linalg.norm(av), np.linalg.norm(v) * np.linalg.norm(au))
        if abs(lhs - rhs) > rel_tol * max(scale, 1e-300):
            raise NotSymmetric(f"symmetry probe failed: |{lhs} - {rhs}| > {rel_tol} * {scale}")


def cr_solve(
    a: LinearOperator,
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    maxit: int = 100,
) -> tuple[np.ndarray, KrylovTrace]:
    """Conjugate residual method for symmetric (definite) operators.

    The operator is probe-checked for symmetry on random vector pairs first.
    """
    _probe_symmetry(a)
    n = a.dimension
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()

    r = b - a.apply(x)
    norms = [float(np.linalg.norm(r))]
    iterates = [x.copy()]
    status = KrylovStatus.MAX_ITERATIONS
    if norms[0] < tol:
        return x, KrylovTrace(norms, iterates, KrylovStatus.CONVERGED)

    ar = a.apply(r)
    p = r.copy()
    ap = ar.copy()
    rho = float(r @ ar)
    for _ in range(maxit):
        ap2 = float(ap @ ap)
        if ap2 == 0.0 or rho == 0.0:
            status = KrylovStatus.STALLED
            break
        alpha = rho / ap2
        x += alpha * p
        r -= alpha * ap
        norms.append(float(np.linalg.norm(r)))
        iterates.append(x.copy())
        if norms[-1] < tol:
            status = KrylovStatus.CONVERGED
            break
        ar = a.apply(r)
        rho_new = float(r @ ar)
        beta = rho_new / rho
        rho = rho_new
        p = r + beta * p
        ap = ar + beta * ap
    return x.copy(), KrylovTrace(norms, iterates, status)
