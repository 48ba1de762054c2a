"""Dense double-precision kernels: product, LU solve, inverse, numerical rank.

Matrices and vectors are plain ``numpy.float64`` arrays. The public
functions validate shape and finiteness and then defer to small
``numba`` kernels with a fixed summation and pivoting order, so the same
inputs always give bit-identical outputs.
"""

import numpy as np
from numba import njit

from .errors import NonFiniteError, ShapeError, SingularMatrixError

SINGULAR_TOL = 1e-12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a C-contiguous float64 2-D array, rejecting NaN/Inf."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return m


def as_vector(v, name="vector"):
    x = np.ascontiguousarray(v, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return x


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def matmul_kernel(a, b):
    rows, inner = a.shape
    cols = b.shape[1]
    c = np.zeros((rows, cols))
    for i in range(rows):
        for k in range(inner):
            aik = a[i, k]
            if aik == 0.0:
                continue
            for j in range(cols):
                c[i, j] += aik * b[k, j]
    return c


@njit(cache=True)
def matvec_kernel(a, x):
    rows, cols = a.shape
    y = np.zeros(rows)
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += a[i, j] * x[j]
        y[i] = acc
    return y


@njit(cache=True)
def lu_factor_kernel(a, rel_tol):
    """In-place-style LU with partial pivoting on a copy of ``a``.

    Returns ``(lu, piv, bad)`` where ``bad`` is -1 on success or the first
    column whose pivot is below ``rel_tol`` times the largest pivot.
    Ties in pivot magnitude go to the smallest row index.
    """
    n = a.shape[0]
    lu = a.copy()
    piv = np.arange(n)
    if n == 0:
        return lu, piv, -1
    pivots = np.zeros(n)
    running = 0.0
    for j in range(n):
        p = j
        best = abs(lu[j, j])
        for i in range(j + 1, n):
            v = abs(lu[i, j])
            if v > best:
                best = v
                p = i
        if best > running:
            running = best
        if best == 0.0 or best <= rel_tol * running:
            return lu, piv, j
        if p != j:
            for c in range(n):
                tmp = lu[j, c]
                lu[j, c] = lu[p, c]
                lu[p, c] = tmp
            tp = piv[j]
            piv[j] = piv[p]
            piv[p] = tp
        pivots[j] = best
        d = lu[j, j]
        for i in range(j + 1, n):
            f = lu[i, j] / d
            lu[i, j] = f
            if f != 0.0:
                for c in range(j + 1, n):
                    lu[i, c] -= f * lu[j, c]
    # a late large pivot can make an early one relatively tiny
    for j in range(n):
        if pivots[j] <= rel_tol * running:
            return lu, piv, j
    return lu, piv, -1


@njit(cache=True)
def lu_solve_kernel(lu, piv, b):
    n = lu.shape[0]
    m = b.shape[1]
    x = np.empty((n, m))
    for i in range(n):
        for c in range(m):
            x[i, c] = b[piv[i], c]
    for c in range(m):
        for i in range(n):
            acc = x[i, c]
            for k in range(i):
                acc -= lu[i, k] * x[k, c]
            x[i, c] = acc
        for i in range(n - 1, -1, -1):
            acc = x[i, c]
            for k in range(i + 1, n):
                acc -= lu[i, k] * x[k, c]
            x[i, c] = acc / lu[i, i]
    return x


@njit(cache=True)
def solve_kernel(m, b, rel_tol):
    lu, piv, bad = lu_factor_kernel(m, rel_tol)
    if bad >= 0:
        return np.zeros(b.shape), bad
    return lu_solve_kernel(lu, piv, b), -1


@njit(cache=True)
def solve_vec_kernel(m, b, rel_tol):
    x, bad = solve_kernel(m, b.reshape((b.shape[0], 1)), rel_tol)
    return x[:, 0].copy(), bad


@njit(cache=True)
def rank_kernel(a, rel_tol):
    """Gaussian elimination with complete pivoting; counts pivots above
    ``rel_tol`` times the first (largest) pivot."""
    w = a.copy()
    rows, cols = w.shape
    r = 0
    first = 0.0
    for step in range(min(rows, cols)):
        best = 0.0
        bi = step
        bj = step
        for i in range(step, rows):
            for j in range(step, cols):
                v = abs(w[i, j])
                if v > best:
                    best = v
                    bi = i
                    bj = j
        if step == 0:
            first = best
        if best == 0.0 or best <= rel_tol * first:
            break
        if bi != step:
            for c in range(cols):
                tmp = w[step, c]
                w[step, c] = w[bi, c]
                w[bi, c] = tmp
        if bj != step:
            for i in range(rows):
                tmp = w[i, step]
                w[i, step] = w[i, bj]
                w[i, bj] = tmp
        d = w[step, step]
        for i in range(step + 1, rows):
            f = w[i, step] / d
            if f != 0.0:
                for c in range(step, cols):
                    w[i, c] -= f * w[step, c]
        r += 1
    return r


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def mat_mul(a, b):
    """Matrix product by the plain triple loop (row-major accumulation)."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return matmul_kernel(a, b)


def solve_linear(m, b):
    """Solve ``m @ x = b`` for square ``m`` by partially pivoted LU.

    ``b`` may be a vector or a matrix; the result has the same rank.
    Raises :class:`SingularMatrixError` when a pivot drops below
    ``SINGULAR_TOL`` relative to the largest pivot.
    """
    m = as_matrix(m, "M")
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"M must be square, got {m.shape}")
    vec = np.ndim(b) == 1
    rhs = as_vector(b, "B")[:, None] if vec else as_matrix(b, "B")
    if rhs.shape[0] != m.shape[0]:
        raise ShapeError(f"right-hand side has {rhs.shape[0]} rows, M has {m.shape[0]}")
    x, bad = solve_kernel(m, np.ascontiguousarray(rhs), SINGULAR_TOL)
    if bad >= 0:
        raise SingularMatrixError(bad)
    return x[:, 0] if vec else x


def invert(m):
    m = as_matrix(m, "M")
    return solve_linear(m, np.eye(m.shape[0]))


def rank(a):
    a = as_matrix(a, "A")
    if a.size == 0:
        return 0
    return int(rank_kernel(a, SINGULAR_TOL))
