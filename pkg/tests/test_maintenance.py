import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import full_rank
from detlp.errors import DomainError, RankError, SingularMatrixError
from detlp.maintenance import (
    CHEAP,
    FALLBACK,
    REBUILD,
    V_RESET,
    ProjectionMaintainer,
    ResetStrategy,
    ScalarMap,
    batch_threshold,
    smw_downdate,
)
from detlp.oracle import exact_m, exact_projection

EPS = 0.1


def in_band(ref, x, eps):
    return bool(np.all(((1 - eps) * ref <= x) & (x <= (1 + eps) * ref)))


def check_result(mp, res, u_new, v_new):
    """Oracle equivalence plus the two exact sandwiches."""
    expected = exact_projection(mp.A, res.u_tilde_new, mp.f(res.v_tilde_new))
    assert np.max(np.abs(res.r - expected)) <= 1e-7 * (1 + np.max(np.abs(res.r)))
    assert in_band(res.u_tilde_new, u_new, mp.eps_mp)
    assert in_band(res.v_tilde_new, v_new, mp.eps_mp)


# ---------------------------------------------------------------- initialize


def test_initialize_square_is_identity():
    mp = ProjectionMaintainer(np.eye(3), np.ones(3), ScalarMap.sqrt(), np.ones(3), EPS)
    assert np.allclose(mp.M, np.eye(3))
    assert np.allclose(mp.w, np.ones(3))


def test_initialize_identity_stub():
    mp = ProjectionMaintainer([[1.0, 1.0]], [1.0, 1.0], ScalarMap.identity(), [1.0, 0.0], EPS)
    assert np.allclose(mp.M, 0.5 * np.ones((2, 2)))
    assert np.allclose(mp.w, [0.5, 0.5])


def test_initialize_weighted_row():
    mp = ProjectionMaintainer([[1.0, 1.0]], [4.0, 1.0], ScalarMap.sqrt(), [1.0, 1.0], EPS)
    assert np.allclose(mp.M, np.ones((2, 2)) / 5)
    assert np.allclose(mp.w, [0.6, 0.6])


def test_initialize_errors():
    with pytest.raises(RankError):
        ProjectionMaintainer([[1.0, 1.0], [2.0, 2.0]], np.ones(2), ScalarMap.sqrt(), np.ones(2), EPS)
    with pytest.raises(DomainError):
        ProjectionMaintainer([[1.0, 1.0]], [1.0, 0.0], ScalarMap.sqrt(), np.ones(2), EPS)
    with pytest.raises(DomainError):
        ProjectionMaintainer([[1.0, 1.0]], np.ones(2), ScalarMap.sqrt(), [1.0, -1.0], EPS)
    with pytest.raises(DomainError):
        ProjectionMaintainer([[1.0, 1.0]], np.ones(2), ScalarMap.sqrt(), np.ones(2), 0.25)


def test_counters_start_at_zero():
    mp = ProjectionMaintainer([[1.0, 1.0]], np.ones(2), ScalarMap.sqrt(), np.ones(2), EPS)
    st_ = mp.stats()
    assert (st_.updates, st_.rebuilds, st_.v_resets, st_.cheap, st_.fallbacks) == (0, 0, 0, 0, 0)


def test_scalar_maps():
    x = np.array([0.25, 1.0, 4.0])
    assert np.allclose(ScalarMap.sqrt()(x), [0.5, 1.0, 2.0])
    lam = 3.0
    assert np.allclose(ScalarMap.grad_sinh(lam)(x), lam * np.sinh(lam * (x - 1)) / np.sqrt(x))
    assert np.array_equal(ScalarMap.identity()(x), x)


def test_strategy_parse():
    assert ResetStrategy.parse("grow") is ResetStrategy.GROW_LOOP
    assert ResetStrategy.parse("pow2") is ResetStrategy.POWER_OF_TWO
    with pytest.raises(ValueError):
        ResetStrategy.parse("fast")


def test_batch_threshold():
    assert batch_threshold(8, 2 / 3) == 4
    assert batch_threshold(27, 2 / 3) == 9
    assert batch_threshold(10, 0.5) == 4


# ---------------------------------------------------------------- plan


def _mp4(**kw):
    A = np.array([[1.0, 2.0, 0.0, 1.0], [0.0, 1.0, 1.0, -1.0]])
    return ProjectionMaintainer(A, np.ones(4), ScalarMap.sqrt(), np.ones(4), EPS, **kw)


def test_plan_no_drift():
    plan = _mp4().plan(np.ones(4), np.ones(4))
    assert plan.k == 0 and plan.S.size == 0 and plan.T.size == 0
    assert np.array_equal(plan.y, np.zeros(4))


def test_plan_counts_large_drifts():
    plan = _mp4().plan(np.array([1.2, 1.05, 1.0, 1.0]), np.ones(4))
    assert plan.k == 1
    assert list(plan.S) == [0]


def test_plan_band_violations():
    v = np.ones(4)
    v[[0, 2, 3]] *= 1.2
    assert _mp4().plan(np.ones(4), v).T.size == 3


def test_plan_sort_is_stable():
    plan = _mp4().plan(np.array([1.0, 1.3, 0.7, 1.3]), np.ones(4))
    assert list(plan.pi) == [1, 2, 3, 0]


@pytest.mark.parametrize(
    "y, k",
    [
        # n = 8: shrink factor 1 - 1/ln 8 ~ 0.519
        ([0.5, 0.4, 0.3, 0.01, 0, 0, 0, 0], 3),  # probe 5 is 0
        ([0.5, 0.4, 0.3, 0.2, 0.2, 0.01, 0, 0], 5),  # probe 8 is 0
        ([0.15, 0.09, 0.09, 0.09, 0.09, 0.09, 0, 0], 5),  # 1 -> 2 -> 3 -> 5, probe 8 fails
        ([0.5, 0.3, 0.09, 0, 0, 0, 0, 0], 2),  # 0.09 < 0.519 * 0.3
        ([0.5, 0.09, 0.09, 0.09, 0, 0, 0, 0], 1),  # 0.09 < 0.519 * 0.5
        ([0.2] * 8, 8),
    ],
)
def test_grow_loop(y, k):
    A = full_rank(np.random.default_rng(0), 3, 8)
    mp = ProjectionMaintainer(A, np.ones(8), ScalarMap.sqrt(), np.ones(8), EPS, threshold=1)
    assert mp.plan(1 + np.array(y), np.ones(8)).k == k


def test_power_of_two_rule():
    A = full_rank(np.random.default_rng(2), 4, 16)
    mp = ProjectionMaintainer(A, np.ones(16), ScalarMap.sqrt(), np.ones(16), EPS, threshold=1,
                              strategy="pow2")
    log_n = math.log(16)
    # y_pi(2^l) must drop below (1 - 0.5 l / ln 16) * eps
    y = np.zeros(16)
    y[:3] = 0.2
    # l=0: 0.2; l=1: 0.2; l=2: y_pi(4) = 0 < (1 - 1/ln16) * 0.1 -> k = 4
    assert mp.plan(1 + y, np.ones(16)).k == 4
    y[:] = 0.2
    assert mp.plan(1 + y, np.ones(16)).k == 16
    y = np.zeros(16)
    y[0] = 0.2
    y[1] = 0.99 * 0.1 * (1 - 0.5 / log_n)
    assert mp.plan(1 + y, np.ones(16)).k == 2


# ---------------------------------------------------------------- smw


def test_smw_empty_is_identity(rng):
    M = rng.standard_normal((4, 4))
    assert np.array_equal(smw_downdate(M, [], []), M)


def test_smw_scalar():
    assert smw_downdate([[0.5]], [0], [2.0])[0, 0] == pytest.approx(0.25)


def test_smw_matches_recompute(rng):
    A = full_rank(rng, 3, 6)
    u = rng.uniform(0.5, 2.0, 6)
    u_new = u.copy()
    u_new[[1, 4]] *= [1.7, 0.6]
    out = smw_downdate(exact_m(A, u), [1, 4], (u_new - u)[[1, 4]])
    assert np.max(np.abs(out - exact_m(A, u_new))) <= 1e-8


def test_smw_zero_delta_rejected():
    with pytest.raises(DomainError):
        smw_downdate(np.eye(2), [0], [0.0])


def test_smw_singular_inner():
    # Delta^-1 + M_SS = -1 + 1 = 0
    with pytest.raises(SingularMatrixError):
        smw_downdate([[1.0]], [0], [-1.0])


# ---------------------------------------------------------------- update


def test_noop_update_is_cheap(rng):
    A = full_rank(rng, 2, 5)
    u, v = rng.uniform(0.5, 2, 5), rng.uniform(0.5, 2, 5)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), v, EPS)
    res = mp.update(u, v)
    assert res.branch == CHEAP and res.k == 0 and res.t_count == 0
    assert np.allclose(res.r, np.sqrt(u) * mp.w)


def test_rebuild_branch(rng):
    A = full_rank(rng, 3, 7)
    u, v = rng.uniform(0.5, 2, 7), rng.uniform(0.5, 2, 7)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), v, EPS, threshold=1)
    u_new = u.copy()
    u_new[2] *= 1.5
    res = mp.update(u_new, v)
    assert res.branch == REBUILD
    assert np.max(np.abs(res.r - exact_projection(A, res.u_tilde_new, np.sqrt(res.v_tilde_new)))) <= 1e-8
    assert mp.audit().m_deviation <= 1e-10


def test_v_reset_branch(rng):
    A = full_rank(rng, 3, 7)
    u, v = rng.uniform(0.5, 2, 7), rng.uniform(0.5, 2, 7)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), v, EPS, threshold=1)
    M_before = mp.M.copy()
    res = mp.update(u, 1.3 * v)
    assert res.branch == V_RESET
    assert np.array_equal(res.v_tilde_new, 1.3 * v)
    assert np.array_equal(mp.M, M_before)
    assert np.max(np.abs(res.r - exact_projection(A, u, np.sqrt(1.3 * v)))) <= 1e-8


def test_cheap_branch_leaves_members(rng):
    A = full_rank(rng, 4, 12)
    u, v = rng.uniform(0.5, 2, 12), rng.uniform(0.5, 2, 12)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), v, EPS)
    before = [x.copy() for x in (mp.M, mp.w, mp.u_tilde, mp.v_tilde)]
    u_new, v_new = u.copy(), v.copy()
    u_new[3] *= 1.4
    v_new[5] *= 0.7
    res = mp.update(u_new, v_new)
    assert res.branch == CHEAP and res.k == 1 and res.t_count == 1
    for a, b in zip(before, (mp.M, mp.w, mp.u_tilde, mp.v_tilde)):
        assert np.array_equal(a, b)
    check_result(mp, res, u_new, v_new)


def test_fallback_on_ill_conditioned_inner(rng):
    A = full_rank(rng, 2, 4)
    u = np.ones(4)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), u, EPS, threshold=1, strategy="pow2")
    # pow2 picks k = n = 4, dragging a 1e-14 drift into S
    u_new = np.array([1.5, 1.2, 1.0 + 1e-14, 1.0])
    res = mp.update(u_new, u)
    assert res.branch == FALLBACK
    assert mp.stats().fallbacks == 1
    check_result(mp, res, u_new, u)
    assert mp.audit().m_deviation <= 1e-12


def test_audit_examples(rng):
    n = 16
    A = full_rank(rng, 6, n)
    u = rng.uniform(0.5, 2, n)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), u, EPS)
    rep = mp.audit()
    assert rep.m_deviation <= 1e-12 and rep.w_deviation <= 1e-12
    for _ in range(100):
        g = rng.standard_normal(n)
        u = u * (1 + 0.03 * g / np.linalg.norm(g))
        mp.update(u, u)
    rep = mp.audit()
    assert rep.m_deviation <= 1e-6 and rep.w_deviation <= 1e-6
    mp.rebuild()
    rep = mp.audit()
    assert rep.m_deviation <= 1e-12 and rep.w_deviation <= 1e-12


def test_periodic_audit_counts(rng):
    A = full_rank(rng, 3, 8)
    u = rng.uniform(0.5, 2, 8)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), u, EPS, audit_every=5)
    for _ in range(20):
        u = u * (1 + 0.02 * rng.standard_normal(8))
        mp.update(u, u)
    assert mp.stats().audits == 4
    assert mp.stats().audit_fallbacks == 0


# ---------------------------------------------------------------- properties


drift_case = st.tuples(
    st.integers(2, 24),  # n
    st.floats(0.1, 0.9),  # d / n
    st.integers(1, 30),  # steps
    st.floats(0.001, 0.2),  # per-step l2 drift
    st.sampled_from(["grow", "pow2"]),
    st.integers(0, 2**32 - 1),
)


@given(drift_case)
def test_update_matches_oracle(case):
    n, frac, steps, C, strategy, seed = case
    rng = np.random.default_rng(seed)
    d = max(1, int(frac * n))
    A = full_rank(rng, d, n)
    u, v = rng.uniform(0.5, 2, n), rng.uniform(0.5, 2, n)
    mp = ProjectionMaintainer(A, u, ScalarMap.sqrt(), v, 0.05, strategy=strategy)
    for _ in range(steps):
        gu, gv = rng.standard_normal(n), rng.standard_normal(n)
        u = u * (1 + C * gu / np.linalg.norm(gu))
        v = v * (1 + C * gv / np.linalg.norm(gv))
        check_result(mp, mp.update(u, v), u, v)


@given(n=st.integers(2, 16), steps=st.integers(1, 25), lam=st.floats(1.0, 20.0), seed=st.integers(0, 2**32 - 1))
def test_two_instances_share_u_tilde(n, steps, lam, seed):
    rng = np.random.default_rng(seed)
    A = full_rank(rng, max(1, n // 2), n)
    u = rng.uniform(0.5, 2, n)
    v = np.ones(n)
    a = ProjectionMaintainer(A, u, ScalarMap.sqrt(), v, 0.05)
    b = ProjectionMaintainer(A, u, ScalarMap.grad_sinh(lam), v, 0.05)
    for _ in range(steps):
        u = u * (1 + 0.05 * rng.standard_normal(n))
        v = v * (1 + 0.01 * rng.standard_normal(n))
        ra, rb = a.update(u, v), b.update(u, v)
        assert ra.u_tilde_new.tobytes() == rb.u_tilde_new.tobytes()
        assert a.u_tilde.tobytes() == b.u_tilde.tobytes()


@given(n=st.integers(2, 40), seed=st.integers(0, 2**32 - 1), strategy=st.sampled_from(["grow", "pow2"]))
def test_plan_invariants(n, seed, strategy):
    rng = np.random.default_rng(seed)
    A = full_rank(rng, 1, n)
    mp = ProjectionMaintainer(A, np.ones(n), ScalarMap.sqrt(), np.ones(n), EPS, strategy=strategy)
    y = rng.uniform(-0.3, 0.3, n) * (rng.random(n) < 0.5)
    plan = mp.plan(1 + y, np.ones(n))
    absy = np.abs(plan.y)
    assert np.all(absy[plan.pi][:-1] >= absy[plan.pi][1:])
    big = int(np.count_nonzero(absy >= EPS))
    assert plan.k >= big
    assert np.all(absy[plan.S] >= EPS) or plan.k > big
    if strategy == "pow2" and big >= mp.threshold:
        assert plan.k == n or (plan.k & (plan.k - 1)) == 0
