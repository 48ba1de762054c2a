"""End-to-end pipeline (embed, run the path, map back) and its JSON report."""

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .central_path import solve
from .errors import VerificationError
from .homogenize import homogenize, recover
from .oracle import BRUTE_FORCE_MAX_N, brute_force_lp

ORACLE_TOL = 1e-6


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


@dataclass(frozen=True)
class SolveReport:
    x_hat: tuple
    objective: float
    feasibility_l1: float
    iterations: int
    wall_time_ms: float
    stats: dict = field(default_factory=dict)
    trace: tuple = None  # ((phi, ||mu/t - 1||_inf, t), ...) or None

    def to_dict(self):
        out = {
            "x_hat": list(self.x_hat),
            "objective": self.objective,
            "feasibility_l1": self.feasibility_l1,
            "iterations": self.iterations,
            "wall_time_ms": self.wall_time_ms,
            "stats": self.stats,
        }
        if self.trace is not None:
            out["trace"] = [list(row) for row in self.trace]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        trace = d.get("trace")
        return cls(
            x_hat=tuple(float(v) for v in d["x_hat"]),
            objective=float(d["objective"]),
            feasibility_l1=float(d["feasibility_l1"]),
            iterations=int(d["iterations"]),
            wall_time_ms=float(d["wall_time_ms"]),
            stats=d.get("stats", {}),
            trace=None if trace is None else tuple(tuple(float(v) for v in row) for row in trace),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def run_solve(inst, params, trace=False, timing=True):
    """homogenize -> central path -> recover.

    Solver errors propagate.  With ``params.verify`` the per-iteration
    checks are enforced, the iteration count is compared to its closed
    form, and for n <= 24 the answer is checked against brute force.
    """
    gamma = params.gamma
    mlp = homogenize(inst, gamma)
    start = time.perf_counter()
    run = solve(mlp, params)
    elapsed = (time.perf_counter() - start) * 1e3 if timing else 0.0

    rec = recover(run.x, inst, gamma)
    x_hat = rec.x_hat
    objective = float(inst.c @ x_hat)
    feas = float(np.sum(np.abs(inst.A @ x_hat - inst.b)))
    n_bar = mlp.n
    expected = params.expected_iterations(n_bar)
    mu_sum = float(np.sum(run.x * run.s))

    stats = {
        "preset": params.preset,
        "eps": params.eps,
        "eps_mp": params.eps_mp,
        "lambda": params.lam,
        "a": params.a,
        "strategy": params.strategy.name.lower(),
        "delta": params.delta,
        "gamma": gamma,
        "threshold": run.threshold,
        "expected_iterations": expected,
        "t_final": run.t,
        "mu_sum": mu_sum,
        "obj_gap_bound": rec.obj_gap_bound,
        "feas_bound": rec.feas_bound,
        "max_u_drift": run.max_u_drift,
        "max_potential": _finite_or_none(float(np.max(run.phi, initial=-np.inf))),
        "max_deviation": _finite_or_none(float(np.max(run.deviation, initial=-np.inf))),
        "maintainers": {k: v.as_dict() for k, v in run.stats.items()},
    }
    if params.verify:
        stats["checks"] = {
            name: {"violations": run.check_violations[name], "max_slack": _finite_or_none(run.check_slack[name])}
            for name in run.check_violations
        }
        problems = []
        if run.iterations != expected:
            problems.append(f"iterations {run.iterations} != closed form {expected}")
        if mu_sum > gamma**2:
            problems.append(f"sum x s = {mu_sum} exceeds gamma^2 = {gamma ** 2}")
        if inst.n <= BRUTE_FORCE_MAX_N:
            opt = brute_force_lp(inst.A, inst.b, inst.c)
            ok_obj = opt.status == "optimal" and objective <= opt.value + rec.obj_gap_bound + ORACLE_TOL
            ok_feas = feas <= rec.feas_bound + ORACLE_TOL
            stats["oracle"] = {
                "status": opt.status,
                "value": _finite_or_none(opt.value),
                "objective_ok": bool(ok_obj),
                "feasibility_ok": bool(ok_feas),
            }
            if not ok_obj:
                problems.append(f"objective {objective} exceeds oracle bound ({opt.status}, {opt.value})")
            if not ok_feas:
                problems.append(f"feasibility {feas} exceeds {rec.feas_bound}")
        if problems:
            raise VerificationError("; ".join(problems))

    rows = None
    if trace:
        rows = tuple(zip(run.phi.tolist(), run.deviation.tolist(), run.t_trace.tolist()))
    return SolveReport(
        x_hat=tuple(x_hat.tolist()),
        objective=objective,
        feasibility_l1=feas,
        iterations=run.iterations,
        wall_time_ms=elapsed,
        stats=stats,
        trace=rows,
    )
