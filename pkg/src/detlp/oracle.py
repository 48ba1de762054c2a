"""Reference computations used only for verification.

Nothing here touches the maintainer or the LU kernels in
:mod:`detlp.linalg`; everything goes through ``numpy.linalg`` so that an
agreement between the two is evidence rather than tautology.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import SingularMatrixError, SizeError

BRUTE_FORCE_MAX_N = 24
_NONNEG_TOL = -1e-10
_COND_LIMIT = 1e12


def exact_projection(A, u, z):
    """``sqrt(U) A^T (A U A^T)^{-1} A sqrt(U) z`` by direct factorization."""
    A = np.asarray(A, dtype=float)
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    su = np.sqrt(u)
    gram = (A * u) @ A.T
    if np.linalg.cond(gram) > 1e15:
        raise SingularMatrixError(-1, "A U A^T is singular")
    return su * (A.T @ np.linalg.solve(gram, A @ (su * z)))


def exact_m(A, u):
    A = np.asarray(A, dtype=float)
    return A.T @ np.linalg.solve((A * u) @ A.T, A)


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    value: float = float("nan")
    x: np.ndarray = None
    basis: tuple = ()


def _basic_solutions(A, b, tol=_NONNEG_TOL):
    d, n = A.shape
    for basis in combinations(range(n), d):
        ab = A[:, basis]
        if np.linalg.cond(ab) > _COND_LIMIT:
            continue
        xb = np.linalg.solve(ab, b)
        if np.all(xb >= tol):
            x = np.zeros(n)
            x[list(basis)] = np.maximum(xb, 0.0)
            yield basis, x


def brute_force_lp(A, b, c):
    """Minimize ``c^T x`` over ``Ax = b, x >= 0`` by basis enumeration.

    Optimal values are attained at basic feasible solutions.  Unboundedness
    is detected by enumerating the extreme rays of ``{Ax = 0, x >= 0,
    1^T x = 1}`` the same way.  Ties in value go to the lexicographically
    smallest basis.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d, n = A.shape
    if n > BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    best = None
    for basis, x in _basic_solutions(A, b):
        val = float(c @ x)
        if best is None or val < best[0] - 1e-12:
            best = (val, x, basis)
    if best is None:
        return LpResult("infeasible")
    ray_sys = np.vstack([A, np.ones((1, n))])
    ray_rhs = np.concatenate([np.zeros(d), [1.0]])
    for _, ray in _basic_solutions(ray_sys, ray_rhs):
        if c @ ray < -1e-9:
            return LpResult("unbounded")
    return LpResult("optimal", best[0], best[1], best[2])


def max_l1_over_polytope(A, b):
    """Largest ``||x||_1`` over the vertices of ``{Ax = b, x >= 0}``, or None."""
    A = np.asarray(A, dtype=float)
    res = brute_force_lp(A, b, -np.ones(A.shape[1]))
    if res.status != "optimal":
        return None
    return -res.value


def block_reduction_matrix(A, u):
    """The (3n+d)-square block matrix whose inverse encodes the projection.

    Block rows: [U^-1, A^T, U^-1/2, 0], [A, 0, 0, 0], [0, 0, -I, 0],
    [U^-1/2, 0, 0, -I].
    """
    A = np.asarray(A, dtype=float)
    u = np.asarray(u, dtype=float)
    d, n = A.shape
    N = 3 * n + d
    C = np.zeros((N, N))
    a, y, z, q = 0, n, n + d, 2 * n + d
    C[a:y, a:y] = np.diag(1.0 / u)
    C[a:y, y:z] = A.T
    C[a:y, z:q] = np.diag(1.0 / np.sqrt(u))
    C[y:z, a:y] = A
    C[z:q, z:q] = -np.eye(n)
    C[q:, a:y] = np.diag(1.0 / np.sqrt(u))
    C[q:, q:] = -np.eye(n)
    return C


def block_reduction_bottom(A, u, z):
    """Solve the block system against ``(0_n, 0_d, z, 1_n)``; return the last n coordinates."""
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float)
    d, n = A.shape
    C = block_reduction_matrix(A, u)
    rhs = np.concatenate([np.zeros(n + d), z, np.ones(n)])
    if np.linalg.cond(C) > _COND_LIMIT:
        raise SingularMatrixError(-1, "block reduction system is singular")
    return np.linalg.solve(C, rhs)[-n:]


def block_reduction_check(A, u, z):
    """Max deviation between the projection read off the block system and
    :func:`exact_projection`.

    Eliminating the block system by hand gives a bottom block of
    ``z - P z - 1_n``, so the projection is recovered as
    ``z - 1_n - bottom``.
    """
    z = np.asarray(z, dtype=float)
    bottom = block_reduction_bottom(A, u, z)
    recovered = z - 1.0 - bottom
    return float(np.max(np.abs(recovered - exact_projection(A, u, z)), initial=0.0))
