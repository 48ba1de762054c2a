"""Lazy maintenance of ``r = sqrt(U) A^T (A U A^T)^{-1} A sqrt(U) f(v)``.

The data structure keeps approximations ``u_tilde ~ u`` and
``v_tilde ~ v`` that are only refreshed where the relative drift leaves
the ``(1 +- eps_mp)`` band.  Members satisfy, at the start of every update::

    M = A^T (A diag(u_tilde) A^T)^{-1} A
    w = M sqrt(diag(u_tilde)) f(v_tilde)

Small changes to ``u_tilde`` are folded into the answer through a
rank-k Sherman-Morrison-Woodbury correction without touching ``M``;
once k reaches ``ceil(n**a)`` the correction is committed to ``M``.

All numerics live in ``numba`` kernels operating on a state tuple
``(A, M, w, u_tilde, v_tilde, counts, hist)`` so that the central path
loop can drive two maintainers without leaving compiled code.
"""

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numba import njit

from .errors import DomainError, RankError, ShapeError, SingularMatrixError
from .linalg import (
    SINGULAR_TOL,
    as_matrix,
    as_vector,
    lu_factor_kernel,
    lu_solve_kernel,
    matmul_kernel,
    matvec_kernel,
    rank,
    solve_kernel,
)

# scalar map kinds
SQRT = 0
GRAD_SINH = 1
IDENTITY = 2

# branch codes reported by update_kernel
REBUILD = 0
V_RESET = 1
CHEAP = 2
FALLBACK = 3
FATAL = -1

# layout of the int64 counters array
C_UPDATES, C_REBUILDS, C_V_RESETS, C_CHEAP, C_FALLBACKS, C_AUDITS, C_AUDIT_FALLBACKS = range(7)
N_COUNTERS = 7

FALLBACK_TOL = 1e-4


class ResetStrategy(IntEnum):
    GROW_LOOP = 0
    POWER_OF_TWO = 1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        if key in ("grow", "grow_loop", "growloop"):
            return cls.GROW_LOOP
        if key in ("pow2", "power_of_two", "poweroftwo"):
            return cls.POWER_OF_TWO
        raise ValueError(f"unknown reset strategy {value!r}")


@njit(cache=True)
def map_scalar(kind, lam, x):
    if kind == SQRT:
        return math.sqrt(x)
    if kind == GRAD_SINH:
        return lam * math.sinh(lam * (x - 1.0)) / math.sqrt(x)
    return x


@njit(cache=True)
def map_vector(kind, lam, x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = map_scalar(kind, lam, x[i])
    return out


@dataclass(frozen=True)
class ScalarMap:
    """Entrywise real function used as ``f`` by a maintainer.

    Only a fixed menu is supported so the compiled kernels can dispatch
    on ``kind``: the square root, the potential-gradient map
    ``lam * sinh(lam * (x - 1)) / sqrt(x)``, and the identity (a test stub).
    """

    kind: int
    lam: float = 0.0

    @classmethod
    def sqrt(cls):
        return cls(SQRT)

    @classmethod
    def grad_sinh(cls, lam):
        return cls(GRAD_SINH, float(lam))

    @classmethod
    def identity(cls):
        return cls(IDENTITY)

    @property
    def positive_domain(self):
        """Whether the map is only defined on strictly positive reals."""
        return self.kind != IDENTITY

    def __call__(self, x):
        return map_vector(self.kind, self.lam, as_vector(x))


@njit(cache=True)
def exact_m_kernel(A, u):
    """``A^T (A diag(u) A^T)^{-1} A``; returns (M, bad_pivot_column)."""
    d, n = A.shape
    au = np.empty((d, n))
    for i in range(d):
        for j in range(n):
            au[i, j] = A[i, j] * u[j]
    gram = matmul_kernel(au, A.T.copy())
    x, bad = solve_kernel(gram, A, SINGULAR_TOL)
    if bad >= 0:
        return np.zeros((n, n)), bad
    return matmul_kernel(A.T.copy(), x), -1


@njit(cache=True)
def plan_kernel(u_tilde, v_tilde, u_new, v_new, eps_mp, thresh, strategy, log_n):
    n = u_tilde.shape[0]
    y = u_new / u_tilde - 1.0
    absy = np.abs(y)
    k = 0
    for i in range(n):
        if absy[i] >= eps_mp:
            k += 1
    # stable sort on -|y| -> descending, ties by smaller index
    perm = np.argsort(-absy, kind="mergesort")
    if k >= thresh:
        if strategy == 0:
            shrink = 1.0 - 1.0 / log_n
            while 1.5 * k < n:
                probe = int(math.ceil(1.5 * k))
                if absy[perm[probe - 1]] >= shrink * absy[perm[k - 1]]:
                    k = min(probe, n)
                else:
                    break
        else:
            ell = 0
            while True:
                idx = 1 << ell
                if idx >= n:
                    k = n
                    break
                if absy[perm[idx - 1]] < (1.0 - 0.5 * ell / log_n) * eps_mp:
                    k = idx
                    break
                ell += 1
    tmask = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        lo = (1.0 - eps_mp) * v_tilde[i]
        hi = (1.0 + eps_mp) * v_tilde[i]
        if not (lo <= v_new[i] and v_new[i] <= hi):
            tmask[i] = True
    return y, perm, k, tmask


@njit(cache=True)
def _rebuild(state, cfg, u_tilde_new, v_new):
    A, M, w, ut, vt, counts, hist = state
    fkind = cfg[0]
    flam = cfg[1]
    m_exact, bad = exact_m_kernel(A, u_tilde_new)
    if bad >= 0:
        return False
    M[:, :] = m_exact
    ut[:] = u_tilde_new
    vt[:] = v_new
    fv = map_vector(fkind, flam, vt)
    w[:] = matvec_kernel(M, np.sqrt(ut) * fv)
    return True


@njit(cache=True)
def update_kernel(state, cfg, u_new, v_new):
    """One update; returns (u_tilde_new, v_tilde_new, f(v_tilde_new), r, branch, k, |T|)."""
    A, M, w, ut, vt, counts, hist = state
    fkind, flam, eps_mp, thresh, strategy, log_n, audit_every, fallback_tol = cfg
    n = ut.shape[0]
    y, perm, k, tmask = plan_kernel(ut, vt, u_new, v_new, eps_mp, thresh, strategy, log_n)
    n_t = 0
    for i in range(n):
        if tmask[i]:
            n_t += 1
    counts[0] += 1

    ut_new = ut.copy()
    sel = np.empty(k, dtype=np.int64)
    ke = 0
    for i in range(k):
        j = perm[i]
        ut_new[j] = u_new[j]
        # zero-drift entries carry no rank; dropping them keeps Delta invertible
        if ut_new[j] != ut[j]:
            sel[ke] = j
            ke += 1
    sel = sel[:ke]

    # inner k x k system (Delta_SS^{-1} + M_SS)
    inner = np.empty((ke, ke))
    ms_t = np.empty((ke, n))
    for a in range(ke):
        for b in range(ke):
            inner[a, b] = M[sel[a], sel[b]]
        inner[a, a] += 1.0 / (ut_new[sel[a]] - ut[sel[a]])
        for j in range(n):
            ms_t[a, j] = M[j, sel[a]]
    lu, piv, bad = lu_factor_kernel(inner, SINGULAR_TOL)
    if bad >= 0:
        if not _rebuild(state, cfg, ut_new, v_new):
            return ut_new, v_new.copy(), np.zeros(n), np.zeros(n), FATAL, k, n_t
        counts[4] += 1
        fv = map_vector(fkind, flam, vt)
        return ut_new, v_new.copy(), fv, np.sqrt(ut) * w, FALLBACK, k, n_t

    sq_new = np.sqrt(ut_new)
    if k >= thresh:
        corr = lu_solve_kernel(lu, piv, ms_t)  # ke x n
        for i in range(n):
            for a in range(ke):
                mia = ms_t[a, i]
                if mia != 0.0:
                    for j in range(n):
                        M[i, j] -= mia * corr[a, j]
        fv = map_vector(fkind, flam, v_new)
        w[:] = matvec_kernel(M, sq_new * fv)
        ut[:] = ut_new
        vt[:] = v_new
        counts[1] += 1
        hist[k] += 1
        return ut_new, v_new.copy(), fv, sq_new * w, REBUILD, k, n_t

    if n_t >= thresh:
        fv = map_vector(fkind, flam, v_new)
        z = sq_new * fv
        q = matvec_kernel(M, z)
        h = lu_solve_kernel(lu, piv, matvec_kernel(ms_t, z).reshape((ke, 1)))[:, 0]
        for a in range(ke):
            for i in range(n):
                q[i] -= ms_t[a, i] * h[a]
        r = sq_new * q
        w[:] = matvec_kernel(M, np.sqrt(ut) * fv)
        vt[:] = v_new
        counts[2] += 1
        return ut_new, v_new.copy(), fv, r, V_RESET, k, n_t

    vt_new = vt.copy()
    for i in range(n):
        if tmask[i]:
            vt_new[i] = v_new[i]
    fv = map_vector(fkind, flam, vt_new)
    touched = tmask.copy()
    for i in range(k):
        touched[perm[i]] = True
    q = w.copy()
    for j in range(n):
        if touched[j]:
            diff = sq_new[j] * fv[j] - math.sqrt(ut[j]) * map_scalar(fkind, flam, vt[j])
            if diff != 0.0:
                for i in range(n):
                    q[i] += M[i, j] * diff
    z = sq_new * fv
    if ke > 0:
        h = lu_solve_kernel(lu, piv, matvec_kernel(ms_t, z).reshape((ke, 1)))[:, 0]
        for a in range(ke):
            for i in range(n):
                q[i] -= ms_t[a, i] * h[a]
    counts[3] += 1
    return ut_new, vt_new, fv, sq_new * q, CHEAP, k, n_t


@njit(cache=True)
def audit_kernel(state, cfg):
    """Max abs deviation of (M, w) from recomputation, plus their scales."""
    A, M, w, ut, vt, counts, hist = state
    m_exact, bad = exact_m_kernel(A, ut)
    if bad >= 0:
        return np.inf, np.inf, 0.0, 0.0
    w_exact = matvec_kernel(m_exact, np.sqrt(ut) * map_vector(cfg[0], cfg[1], vt))
    return (
        np.max(np.abs(M - m_exact)),
        np.max(np.abs(w - w_exact)),
        np.max(np.abs(m_exact)),
        np.max(np.abs(w_exact)) if w_exact.shape[0] > 0 else 0.0,
    )


@njit(cache=True)
def maybe_audit_kernel(state, cfg):
    """Periodic consistency check; rebuilds from scratch past ``fallback_tol``.

    Returns False only if the rebuild itself hits a singular system.
    """
    counts = state[5]
    audit_every = cfg[6]
    if audit_every <= 0 or counts[0] % audit_every != 0:
        return True
    counts[5] += 1
    dm, dw, sm, sw = audit_kernel(state, cfg)
    if dm / max(1.0, sm) > cfg[7] or dw / max(1.0, sw) > cfg[7]:
        counts[6] += 1
        return _rebuild(state, cfg, state[3].copy(), state[4].copy())
    return True


@njit(cache=True)
def smw_downdate_kernel(M, sel, delta):
    k = sel.shape[0]
    n = M.shape[0]
    if k == 0:
        return M.copy(), -1
    inner = np.empty((k, k))
    ms_t = np.empty((k, n))
    for a in range(k):
        for b in range(k):
            inner[a, b] = M[sel[a], sel[b]]
        inner[a, a] += 1.0 / delta[a]
        for j in range(n):
            ms_t[a, j] = M[j, sel[a]]
    corr, bad = solve_kernel(inner, ms_t, SINGULAR_TOL)
    if bad >= 0:
        return M.copy(), bad
    return M - matmul_kernel(ms_t.T.copy(), corr), -1


def smw_downdate(M, S, delta):
    """Return ``M - M_S (Delta_SS^{-1} + M_SS)^{-1} M_S^T``.

    ``S`` lists the k changed indices and ``delta`` the matching diagonal
    entries of Delta (``u_tilde_new - u_tilde`` on S).  An empty S leaves
    M unchanged.
    """
    M = as_matrix(M, "M")
    sel = np.asarray(S, dtype=np.int64).reshape(-1)
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if delta.shape != sel.shape:
        raise ShapeError("S and delta must have the same length")
    if np.any(delta == 0.0):
        raise DomainError("Delta_SS has a zero diagonal entry")
    out, bad = smw_downdate_kernel(M, sel, delta)
    if bad >= 0:
        raise SingularMatrixError(bad, "inner SMW system is singular")
    return out


@dataclass(frozen=True)
class UpdatePlan:
    y: np.ndarray
    pi: np.ndarray
    k: int
    S: np.ndarray
    T: np.ndarray


@dataclass(frozen=True)
class UpdateResult:
    u_tilde_new: np.ndarray
    v_tilde_new: np.ndarray
    f_v_tilde: np.ndarray
    r: np.ndarray
    branch: int
    k: int
    t_count: int


@dataclass(frozen=True)
class AuditReport:
    m_deviation: float
    w_deviation: float
    m_scale: float
    w_scale: float

    @property
    def m_relative(self):
        return self.m_deviation / max(1.0, self.m_scale)

    @property
    def w_relative(self):
        return self.w_deviation / max(1.0, self.w_scale)


@dataclass(frozen=True)
class MaintainerStats:
    """Read-only counter snapshot.  ``rebuild_ranks`` maps k to the number
    of committed rank-k updates."""

    updates: int
    rebuilds: int
    v_resets: int
    cheap: int
    fallbacks: int
    audits: int
    audit_fallbacks: int
    rebuild_ranks: dict

    @classmethod
    def from_arrays(cls, counts, hist):
        ranks = {int(k): int(c) for k, c in enumerate(hist) if c}
        return cls(*(int(c) for c in counts[:N_COUNTERS]), rebuild_ranks=ranks)

    def as_dict(self):
        return {
            "updates": self.updates,
            "rebuilds": self.rebuilds,
            "v_resets": self.v_resets,
            "cheap": self.cheap,
            "fallbacks": self.fallbacks,
            "audits": self.audits,
            "audit_fallbacks": self.audit_fallbacks,
            "rebuild_ranks": {str(k): v for k, v in sorted(self.rebuild_ranks.items())},
        }


def batch_threshold(n, a):
    return max(1, math.ceil(n**a))


def growth_log(n):
    return max(math.log(n), 1.0)


class ProjectionMaintainer:
    """Maintains ``sqrt(U~) A^T (A U~ A^T)^{-1} A sqrt(U~) f(v~)`` under drift.

    Single-writer: ``update`` and ``audit`` must not run concurrently on
    one instance.
    """

    def __init__(self, A, u, f, v, eps_mp, a=2.0 / 3.0, strategy=ResetStrategy.GROW_LOOP,
                 audit_every=0, fallback_tol=FALLBACK_TOL, threshold=None):
        A = as_matrix(A, "A")
        u = as_vector(u, "u").copy()
        v = as_vector(v, "v").copy()
        d, n = A.shape
        if u.shape[0] != n or v.shape[0] != n:
            raise ShapeError(f"u and v must have length {n}")
        if n < d:
            raise RankError(rank(A), d, f"A has more rows ({d}) than columns ({n})")
        r = rank(A)
        if r != d:
            raise RankError(r, d)
        if np.any(u <= 0):
            raise DomainError("u must be strictly positive")
        if f.positive_domain and np.any(v <= 0):
            raise DomainError("v must be strictly positive for this map")
        if not 0.0 < eps_mp < 0.25:
            raise DomainError(f"eps_mp must lie in (0, 1/4), got {eps_mp}")
        if not 0.0 < a <= 1.0:
            raise DomainError(f"batch exponent a must lie in (0, 1], got {a}")
        self.A = A
        self.f = f
        self.eps_mp = float(eps_mp)
        self.a = float(a)
        self.strategy = ResetStrategy.parse(strategy)
        # ``threshold`` overrides ceil(n^a); tests use it to pin branches
        self.threshold = batch_threshold(n, a) if threshold is None else int(threshold)
        if self.threshold < 1:
            raise DomainError(f"threshold must be >= 1, got {threshold}")
        self.counts = np.zeros(N_COUNTERS, dtype=np.int64)
        self.hist = np.zeros(n + 1, dtype=np.int64)
        self.cfg = (
            int(f.kind), float(f.lam), self.eps_mp, int(self.threshold), int(self.strategy),
            growth_log(n), int(audit_every), float(fallback_tol),
        )
        m, bad = exact_m_kernel(A, u)
        if bad >= 0:
            raise SingularMatrixError(bad, "A diag(u) A^T is numerically singular")
        self.M = m
        self.u_tilde = u
        self.v_tilde = v
        self.w = matvec_kernel(m, np.sqrt(u) * f(v))

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def state(self):
        return (self.A, self.M, self.w, self.u_tilde, self.v_tilde, self.counts, self.hist)

    def _check(self, u_new, v_new):
        u_new = as_vector(u_new, "u_new")
        v_new = as_vector(v_new, "v_new")
        if u_new.shape[0] != self.n or v_new.shape[0] != self.n:
            raise ShapeError(f"u_new and v_new must have length {self.n}")
        if np.any(u_new <= 0):
            raise DomainError("u_new must be strictly positive")
        if self.f.positive_domain and np.any(v_new <= 0):
            raise DomainError("v_new must be strictly positive for this map")
        return u_new, v_new

    def plan(self, u_new, v_new):
        u_new, v_new = self._check(u_new, v_new)
        fk, fl, eps, thresh, strat, log_n, _, _ = self.cfg
        y, perm, k, tmask = plan_kernel(self.u_tilde, self.v_tilde, u_new, v_new, eps, thresh, strat, log_n)
        return UpdatePlan(y=y, pi=perm, k=int(k), S=perm[:k].copy(), T=np.flatnonzero(tmask))

    def update(self, u_new, v_new):
        u_new, v_new = self._check(u_new, v_new)
        ut, vt, fv, r, branch, k, n_t = update_kernel(self.state, self.cfg, u_new, v_new)
        if branch == FATAL:
            raise SingularMatrixError(-1, "full recomputation after SMW failure is singular")
        if not maybe_audit_kernel(self.state, self.cfg):
            raise SingularMatrixError(-1, "audit rebuild is singular")
        return UpdateResult(ut, vt, fv, r, int(branch), int(k), int(n_t))

    def audit(self):
        return AuditReport(*(float(x) for x in audit_kernel(self.state, self.cfg)))

    def rebuild(self):
        """Recompute M and w from scratch for the current approximations."""
        if not _rebuild(self.state, self.cfg, self.u_tilde.copy(), self.v_tilde.copy()):
            raise SingularMatrixError(-1)
        self.counts[C_FALLBACKS] += 1

    def stats(self):
        return MaintainerStats.from_arrays(self.counts, self.hist)


def initialize(A, u, f, v, eps_mp, a=2.0 / 3.0, strategy=ResetStrategy.GROW_LOOP, **kwargs):
    return ProjectionMaintainer(A, u, f, v, eps_mp, a=a, strategy=strategy, **kwargs)


def plan_update(m, u_new, v_new):
    return m.plan(u_new, v_new)


def update(m, u_new, v_new):
    return m.update(u_new, v_new)


def audit(m):
    return m.audit()
