"""Short-step central path driven by two projection maintainers.

Each step shrinks ``t`` by ``1 - eps / (3 sqrt(n))`` and moves ``(x, s)``
so that ``mu = x s`` tracks ``t``.  The direction combines a pure
``t``-decrease term with a descent step on the potential
``Phi(r) = sum cosh(lam r_i)`` evaluated at ``r = mu / t - 1``; both
projections are read from lazily maintained structures (one with
``f = sqrt`` over ``mu``, one with the potential-gradient map over
``mu / t``) instead of being solved fresh.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    DomainError,
    IterationLimitError,
    PotentialRangeError,
    SingularMatrixError,
    StepFailure,
    VerificationError,
)
from .linalg import as_vector
from .maintenance import (
    FATAL,
    ProjectionMaintainer,
    ResetStrategy,
    ScalarMap,
    maybe_audit_kernel,
    update_kernel,
)

OVERFLOW_GUARD = 700.0
INVARIANT_TOL = 1e-7
LEMMA_TOL = 1e-6

# step / loop status codes
OK, CAPPED, NONPOSITIVE, SINGULAR, U_MISMATCH, OUT_OF_RANGE = range(6)

# per-iteration checks, indexed into the loop's slack/violation arrays
CHECKS = (
    "change_sx.s",          # ||d_s / s||_2 <= 1.2 eps
    "change_sx.x",          # ||d_x / x||_2 <= 1.2 eps
    "change_sx.s_tilde",    # ||d_s / s~||_2 <= 1.2 eps
    "change_sx.x_tilde",    # ||d_x / x~||_2 <= 1.2 eps
    "change_mu",            # ||(mu' - mu) / mu||_2 <= 2.5 eps
    "change_mu_over_t",     # ||(mu'/t' - mu/t) / (mu/t)||_2 <= 3 eps
    "change_u",             # ||(u' - u) / u||_2 <= 3 eps
    "delta_length.t",       # ||d_t~||_2 <= 1.2 (eps/3) t
    "delta_length.phi",     # ||d_phi~||_2 <= (eps/2) t
    "delta_length.mu",      # ||d_mu~||_2 <= eps t
    "bound_error",          # ||mu' - mu - d_mu~||_2 <= 6 t eps^2
    "gradient_direction",   # <g, -g~/|g~|> <= -0.9 |g| + 2.5 lam^2 eps_mp sqrt(n)
    "potential_bound",      # Phi(mu'/t' - 1) <= 2n
    "mu_close_to_t",        # ||mu'/t' - 1||_inf <= 0.1
    "potential_decrease",   # Phi' <= Phi - (eps/3)(lam/sqrt n)(Phi - n) + 3.25 eps^2 lam^2 sqrt n
    "linear_system",        # |X~ d_s + S~ d_x - d_mu|_inf <= tol, |A d_x|_inf <= tol |A| |x|
)
N_CHECKS = len(CHECKS)
_ALWAYS = (12, 13)
# the per-step bound constants are only guaranteed under the paper preset; other presets
# still record every check but only fail on the algebraic contract
_CONTRACT = ("linear_system",)


# ---------------------------------------------------------------------------
# potential utilities
# ---------------------------------------------------------------------------


def _guard(x, lam):
    x = as_vector(x, "x")
    if x.size and lam * np.max(np.abs(x)) > OVERFLOW_GUARD:
        raise PotentialRangeError(f"lam * ||x||_inf exceeds {OVERFLOW_GUARD}")
    return x


def potential(x, lam):
    """``sum_i cosh(lam x_i)``."""
    x = _guard(x, lam)
    return float(np.sum(np.cosh(lam * x)))


def potential_gradient(x, lam):
    x = _guard(x, lam)
    return lam * np.sinh(lam * x)


def potential_hessian_norm_sq(r, v, lam):
    """``||v||^2`` in the Hessian metric of the potential at ``r``."""
    r = _guard(r, lam)
    v = as_vector(v, "v")
    return float(np.sum(lam * lam * np.cosh(lam * r) * v * v))


def infinity_bound_from_potential(phi, lam):
    """Upper bound on ``||x||_inf`` for any x whose potential equals ``phi``.

    Follows from ``Phi(x) >= exp(lam ||x||_inf) / 2``.
    """
    if phi < 1.0:
        raise DomainError(f"phi must be >= 1, got {phi}")
    return math.log(2.0 * phi) / lam


# ---------------------------------------------------------------------------
# parameters and state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathParams:
    eps: float
    eps_mp: float
    lam: float
    a: float = 2.0 / 3.0
    delta: float = 0.5
    t_init: float = 1.0
    max_iterations: int = 50_000_000
    grad_floor: float = 1e-12
    strategy: ResetStrategy = ResetStrategy.GROW_LOOP
    verify: bool = False
    audit_every: int = 0
    preset: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.eps_mp <= self.eps:
            raise DomainError(f"need 0 < eps_mp <= eps, got eps_mp={self.eps_mp}, eps={self.eps}")
        if not self.eps_mp < 0.25:
            raise DomainError("eps_mp must be below 1/4")
        if self.lam <= 0 or self.delta <= 0 or self.t_init <= 0:
            raise DomainError("lam, delta and t_init must be positive")
        if not 0.0 < self.a <= 1.0:
            raise DomainError(f"a must lie in (0, 1], got {self.a}")
        object.__setattr__(self, "strategy", ResetStrategy.parse(self.strategy))

    @classmethod
    def paper(cls, n, **kwargs):
        """Constants under which every per-iteration bound is proven."""
        ln = math.log(n)
        eps = 1.0 / (1500.0 * ln)
        return cls(eps=eps, eps_mp=eps, lam=40.0 * ln, preset="paper", **kwargs)

    @classmethod
    def relaxed(cls, n, **kwargs):
        return cls(eps=0.01, eps_mp=0.01, lam=10.0 * math.log(n), preset="relaxed", **kwargs)

    @classmethod
    def preset_for(cls, name, n, **kwargs):
        if name == "paper":
            return cls.paper(n, **kwargs)
        if name == "relaxed":
            return cls.relaxed(n, **kwargs)
        raise ValueError(f"unknown preset {name!r}")

    @property
    def gamma(self):
        return min(self.delta, 1.0 / self.lam)

    def stop_threshold(self, n):
        return self.gamma**2 / (2.0 * n)

    def shrink(self, n):
        return 1.0 - self.eps / (3.0 * math.sqrt(n))

    def expected_iterations(self, n):
        thr = self.stop_threshold(n)
        if self.t_init <= thr:
            return 0
        return math.ceil(math.log(self.t_init / thr) / -math.log(self.shrink(n)))


@dataclass(frozen=True)
class CentralPathState:
    x: np.ndarray
    s: np.ndarray
    t: float

    @property
    def mu(self):
        return self.x * self.s

    def deviation(self):
        """``||mu / t - 1||_inf``."""
        return float(np.max(np.abs(self.mu / self.t - 1.0)))


@dataclass(frozen=True)
class StepTrace:
    t_new: float
    u: np.ndarray
    u_tilde: np.ndarray
    m: np.ndarray
    v: np.ndarray
    w: np.ndarray
    p_v: np.ndarray
    p_w: np.ndarray
    mu_tilde: np.ndarray
    x_tilde: np.ndarray
    s_tilde: np.ndarray
    delta_t_tilde: np.ndarray
    delta_phi_tilde: np.ndarray
    delta_mu_tilde: np.ndarray
    p: np.ndarray
    delta_s_tilde: np.ndarray
    delta_x_tilde: np.ndarray
    branches: tuple = ()


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def step_kernel(x, s, t, eps, lam, grad_floor, st_sqrt, cfg_sqrt, st_grad, cfg_grad):
    n = x.shape[0]
    t_new = (1.0 - eps / (3.0 * math.sqrt(n))) * t
    mu = x * s
    u = x / s
    ut, _vt, v, p_v, b1, _k1, _t1 = update_kernel(st_sqrt, cfg_sqrt, u, mu)
    status = OK
    if b1 == FATAL or not maybe_audit_kernel(st_sqrt, cfg_sqrt):
        status = SINGULAR
    ut2, m, w, p_w, b2, _k2, _t2 = update_kernel(st_grad, cfg_grad, u, mu / t)
    if b2 == FATAL or not maybe_audit_kernel(st_grad, cfg_grad):
        status = SINGULAR
    for i in range(n):
        if ut[i] != ut2[i]:
            status = U_MISMATCH

    mu_t = m * t
    x_t = x * np.sqrt((mu_t / mu) * (ut / u))
    s_t = s * np.sqrt((mu_t / mu) * (u / ut))
    m_over_t = mu_t / t
    if lam * np.max(np.abs(m_over_t - 1.0)) > OVERFLOW_GUARD:
        status = OUT_OF_RANGE
    gnorm = np.sqrt(np.sum((lam * np.sinh(lam * (m_over_t - 1.0))) ** 2))
    ratio = t_new / t - 1.0
    d_t = ratio * v * np.sqrt(mu_t)
    if gnorm >= grad_floor:
        d_phi = -(eps / 2.0) * t_new * np.sqrt(m_over_t) * w / gnorm
        p = ratio * p_v - (eps / 2.0) * t_new * p_w / (math.sqrt(t) * gnorm)
    else:
        d_phi = np.zeros(n)
        p = ratio * p_v
    d_mu = d_t + d_phi
    sq = np.sqrt(mu_t)
    d_s = (s_t / sq) * p
    d_x = d_mu / s_t - (x_t / sq) * p
    x_new = x + d_x
    s_new = s + d_s
    if status == OK:
        for i in range(n):
            if not (x_new[i] > 0.0 and s_new[i] > 0.0):
                status = NONPOSITIVE
    return (x_new, s_new, t_new, status, u, ut, m, v, w, p_v, p_w, mu_t, x_t, s_t,
            d_t, d_phi, d_mu, p, d_s, d_x, b1, b2)


@njit(cache=True)
def _phi(r, lam):
    acc = 0.0
    for i in range(r.shape[0]):
        acc += math.cosh(lam * r[i])
    return acc


@njit(cache=True)
def _norm(v):
    return math.sqrt(np.sum(v * v))


@njit(cache=True)
def path_loop_kernel(x, s, t, threshold, max_iter, cap, eps, eps_mp, lam, grad_floor,
                     st_sqrt, cfg_sqrt, st_grad, cfg_grad, verify, tol):
    n = x.shape[0]
    A = st_sqrt[0]
    a_max = np.max(np.abs(A))
    sqrt_n = math.sqrt(n)
    phi_tr = np.empty(cap)
    dev_tr = np.empty(cap)
    t_tr = np.empty(cap)
    slack = np.full(N_CHECKS, -np.inf)
    viol = np.zeros(N_CHECKS, dtype=np.int64)
    max_u_drift = 0.0
    literal_decrease_misses = 0

    r0 = x * s / t - 1.0
    if lam * np.max(np.abs(r0)) > OVERFLOW_GUARD:
        if t > threshold:
            return x, s, t, 0, OUT_OF_RANGE, phi_tr[:0], dev_tr[:0], t_tr[:0], slack, viol, 0.0, 0
        phi0 = np.inf
    else:
        phi0 = _phi(r0, lam)
    it = 0
    status = OK
    while t > threshold:
        if it >= max_iter:
            status = CAPPED
            break
        out = step_kernel(x, s, t, eps, lam, grad_floor, st_sqrt, cfg_sqrt, st_grad, cfg_grad)
        x_new, s_new, t_new, st = out[0], out[1], out[2], out[3]
        if st != OK:
            status = st
            break
        u, m = out[4], out[6]
        mu_t, x_t, s_t = out[11], out[12], out[13]
        d_t, d_phi, d_mu, d_s, d_x = out[14], out[15], out[16], out[18], out[19]

        mu = x * s
        mu_new = x_new * s_new
        r1 = mu_new / t_new - 1.0
        dev1 = np.max(np.abs(r1))
        if lam * dev1 > OVERFLOW_GUARD:
            status = OUT_OF_RANGE
            break
        phi1 = _phi(r1, lam)
        u_new = x_new / s_new
        drift = _norm((u_new - u) / u)
        if drift > max_u_drift:
            max_u_drift = drift
        if it < cap:
            phi_tr[it] = phi1
            dev_tr[it] = dev1
            t_tr[it] = t_new

        vals = np.full(N_CHECKS, -np.inf)
        vals[12] = phi1 - 2.0 * n
        vals[13] = dev1 - 0.1
        if verify:
            vals[0] = _norm(d_s / s) - 1.2 * eps
            vals[1] = _norm(d_x / x) - 1.2 * eps
            vals[2] = _norm(d_s / s_t) - 1.2 * eps
            vals[3] = _norm(d_x / x_t) - 1.2 * eps
            vals[4] = _norm((mu_new - mu) / mu) - 2.5 * eps
            vals[5] = _norm((mu_new / t_new - mu / t) / (mu / t)) - 3.0 * eps
            vals[6] = drift - 3.0 * eps
            vals[7] = _norm(d_t) - 1.2 * (eps / 3.0) * t
            vals[8] = _norm(d_phi) - (eps / 2.0) * t
            vals[9] = _norm(d_mu) - eps * t
            vals[10] = _norm(mu_new - mu - d_mu) - 6.0 * t * eps * eps
            g_true = lam * np.sinh(lam * (mu / t - 1.0))
            g_apx = lam * np.sinh(lam * (mu_t / t - 1.0))
            gn = _norm(g_apx)
            if gn >= grad_floor:
                vals[11] = (-np.sum(g_true * g_apx) / gn
                            - (-0.9 * _norm(g_true) + 2.5 * lam * lam * eps_mp * sqrt_n))
            bound = phi0 - (eps / 3.0) * (lam / sqrt_n) * (phi0 - n) + 3.25 * eps * eps * lam * lam * sqrt_n
            vals[14] = (phi1 - bound) / max(1.0, phi0) - 1e-9
            res = np.max(np.abs(x_t * d_s + s_t * d_x - d_mu))
            ad = 0.0
            for i in range(A.shape[0]):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * d_x[j]
                ad = max(ad, abs(acc))
            vals[15] = max(res - INVARIANT_TOL, ad - INVARIANT_TOL * a_max * np.max(np.abs(x)))
        for c in range(N_CHECKS):
            if vals[c] > slack[c]:
                slack[c] = vals[c]
            lim = 0.0 if (c == 12 or c == 13 or c == 14 or c == 15) else tol
            if vals[c] > lim:
                viol[c] += 1
        if phi0 > 0.5 * n and not (phi1 < phi0 * (1.0 - 1e-9)):
            literal_decrease_misses += 1

        x = x_new
        s = s_new
        t = t_new
        phi0 = phi1
        it += 1
    k = min(it, cap)
    return (x, s, t, it, status, phi_tr[:k], dev_tr[:k], t_tr[:k], slack, viol,
            max_u_drift, literal_decrease_misses)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def initialize_step(A, x, s, t, params):
    """Build the two maintainers for a starting pair (x, s) at path value t."""
    x = as_vector(x, "x")
    s = as_vector(s, "s")
    u = x / s
    mu = x * s
    common = dict(a=params.a, strategy=params.strategy, audit_every=params.audit_every)
    mp_sqrt = ProjectionMaintainer(A, u, ScalarMap.sqrt(), mu, params.eps_mp, **common)
    mp_grad = ProjectionMaintainer(A, u, ScalarMap.grad_sinh(params.lam), mu / t, params.eps_mp, **common)
    return mp_sqrt, mp_grad


def _raise_status(status, where):
    if status == NONPOSITIVE:
        raise StepFailure(f"{where}: step produced a nonpositive x or s entry")
    if status == SINGULAR:
        raise SingularMatrixError(-1, f"{where}: maintainer recomputation is singular")
    if status == U_MISMATCH:
        raise VerificationError(f"{where}: the two maintainers disagree on u_tilde")
    if status == OUT_OF_RANGE:
        raise PotentialRangeError(f"{where}: potential argument outside the overflow guard")


def approximate_step(state, mp_sqrt, mp_grad, params):
    """One step; returns the new state and every intermediate vector."""
    out = step_kernel(
        state.x, state.s, float(state.t), params.eps, params.lam, params.grad_floor,
        mp_sqrt.state, mp_sqrt.cfg, mp_grad.state, mp_grad.cfg,
    )
    _raise_status(out[3], "approximate_step")
    trace = StepTrace(out[2], *out[4:20], branches=(int(out[20]), int(out[21])))
    return CentralPathState(out[0], out[1], out[2]), trace


@dataclass
class PathRun:
    """Outcome of a central path run.  Traces hold one entry per iteration,
    measured after the step: potential, ``||mu/t - 1||_inf`` and ``t``."""

    x: np.ndarray
    s: np.ndarray
    t: float
    iterations: int
    threshold: float
    phi_initial: float
    phi: np.ndarray
    deviation: np.ndarray
    t_trace: np.ndarray
    check_slack: dict
    check_violations: dict
    max_u_drift: float
    literal_decrease_misses: int
    stats: dict = field(default_factory=dict)
    enforced: tuple = ()

    def violations(self):
        """Nonzero violation counts among the enforced checks."""
        return {k: v for k, v in self.check_violations.items() if v and k in self.enforced}


def _enforced(params):
    if not params.verify:
        return ()
    if params.preset == "paper":
        return CHECKS
    return _CONTRACT


def solve(mlp, params):
    """Run the path from the embedded starting point until ``t <= gamma^2/(2n)``.

    ``mlp`` is a :class:`~detlp.homogenize.ModifiedLp`.
    """
    A = mlp.A_path
    n = A.shape[1]
    x = mlp.x0.copy()
    s = mlp.s0.copy()
    t = float(params.t_init)
    threshold = params.stop_threshold(n)
    mp_sqrt, mp_grad = initialize_step(A, x, s, t, params)
    cap = min(params.max_iterations, params.expected_iterations(n) + 1)
    r0 = x * s / t - 1.0
    phi_init = potential(r0, params.lam) if params.lam * np.max(np.abs(r0)) <= OVERFLOW_GUARD else math.inf
    out = path_loop_kernel(
        x, s, t, threshold, int(params.max_iterations), int(cap), params.eps, params.eps_mp,
        params.lam, params.grad_floor, mp_sqrt.state, mp_sqrt.cfg, mp_grad.state, mp_grad.cfg,
        bool(params.verify), LEMMA_TOL,
    )
    x, s, t, it, status, phi_tr, dev_tr, t_tr, slack, viol, drift, misses = out
    checked = range(N_CHECKS) if params.verify else _ALWAYS
    run = PathRun(
        x=x, s=s, t=float(t), iterations=int(it), threshold=threshold, phi_initial=phi_init,
        phi=phi_tr, deviation=dev_tr, t_trace=t_tr,
        check_slack={CHECKS[c]: float(slack[c]) for c in checked},
        check_violations={CHECKS[c]: int(viol[c]) for c in checked},
        max_u_drift=float(drift), literal_decrease_misses=int(misses),
        stats={"sqrt": mp_sqrt.stats(), "grad": mp_grad.stats()},
        enforced=_enforced(params),
    )
    if status not in (OK, CAPPED):
        try:
            _raise_status(status, f"iteration {it}")
        except Exception as exc:
            exc.partial = run
            raise
    if params.verify and run.violations():
        err = VerificationError(f"per-iteration checks failed: {run.violations()}")
        err.partial = run
        raise err
    if status == CAPPED:
        raise IterationLimitError(it, partial=run)
    return run
