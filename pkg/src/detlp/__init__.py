"""Deterministic short-step interior-point LP solver.

The path follows ``x s = t`` with a cosh potential keeping every
coordinate close, and the Newton projections are served by a lazily
updated ``A^T (A U A^T)^{-1} A`` (see :mod:`detlp.maintenance`).
"""

from .central_path import PathParams, approximate_step, initialize_step, solve
from .homogenize import LpInstance, ModifiedLp, homogenize, recover
from .instances import generate_instance, parse_instance
from .maintenance import ProjectionMaintainer, ResetStrategy, ScalarMap
from .report import SolveReport, run_solve

__version__ = "0.1.0"

__all__ = [
    "LpInstance",
    "ModifiedLp",
    "PathParams",
    "ProjectionMaintainer",
    "ResetStrategy",
    "ScalarMap",
    "SolveReport",
    "approximate_step",
    "generate_instance",
    "homogenize",
    "initialize_step",
    "parse_instance",
    "recover",
    "run_solve",
    "solve",
]
