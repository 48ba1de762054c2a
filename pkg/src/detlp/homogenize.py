"""Embedding of a standard-form LP into one with a centered feasible start.

Given ``min c^T x, Ax = b, x >= 0`` with ``||x||_1 <= R`` on the feasible
set and ``||c||_inf <= L``, the modified program has two extra columns and
two extra rows and the all-ones primal point is feasible with slack
``1 + (gamma / L) c``.  A point with ``sum x_i s_i <= gamma**2`` maps back
to an approximate solution of the original program.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RankError, ShapeError
from .linalg import as_matrix, as_vector, rank

_SLACK_MARGIN = 1e-9


@dataclass(frozen=True)
class LpInstance:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    R: float
    L: float

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        b = as_vector(self.b, "b")
        c = as_vector(self.c, "c")
        d, n = A.shape
        if b.shape[0] != d:
            raise ShapeError(f"b has length {b.shape[0]}, expected {d}")
        if c.shape[0] != n:
            raise ShapeError(f"c has length {c.shape[0]}, expected {n}")
        if n < d:
            raise RankError(rank(A), d, f"need n >= d, got n={n}, d={d}")
        r = rank(A)
        if r != d:
            raise RankError(r, d)
        if not self.R > 0:
            raise DomainError(f"R must be positive, got {self.R}")
        if self.L < np.max(np.abs(c), initial=0.0):
            raise DomainError(f"L={self.L} is below ||c||_inf")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "L", float(self.L))

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def d(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class ModifiedLp:
    """The embedded program with its starting triple ``(x0, y0, s0)``.

    ``A_bar`` is kept exactly as constructed, (d+2) x (n+2).  Its last two
    rows are negatives of each other, so its rank is d+1; the central path
    runs on :attr:`A_path`, the same matrix without the last row.
    """

    A_bar: np.ndarray
    b_bar: np.ndarray
    c_bar: np.ndarray
    gamma: float
    x0: np.ndarray
    y0: np.ndarray
    s0: np.ndarray
    source: LpInstance = field(repr=False, default=None)

    @property
    def A_path(self):
        return self.A_bar[:-1].copy()

    @property
    def b_path(self):
        return self.b_bar[:-1].copy()

    @property
    def n(self):
        return self.A_bar.shape[1]

    def residuals(self):
        """(primal, dual) max-abs residuals of the starting triple."""
        primal = self.A_bar @ self.x0 - self.b_bar
        dual = self.A_bar.T @ self.y0 + self.s0 - self.c_bar
        return float(np.max(np.abs(primal))), float(np.max(np.abs(dual)))


def homogenize(inst, gamma):
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    A, b, c, R, L = inst.A, inst.b, inst.c, inst.R, inst.L
    d, n = A.shape
    scaled_c = (gamma / L) * c
    if np.max(np.abs(scaled_c), initial=0.0) > 1.0 - _SLACK_MARGIN:
        raise DomainError("gamma/L * ||c||_inf too close to 1: starting slack would not be positive")
    ones = np.ones(n)
    A_bar = np.zeros((d + 2, n + 2))
    A_bar[:d, :n] = A
    A_bar[:d, n + 1] = b / R - A @ ones
    A_bar[d, :n] = 1.0
    A_bar[d, n] = 1.0
    A_bar[d + 1, :n] = -1.0
    A_bar[d + 1, n] = -1.0
    b_bar = np.concatenate([b / R, [n + 1.0, -(n + 1.0)]])
    c_bar = np.concatenate([scaled_c, [0.0, 1.0]])
    x0 = np.ones(n + 2)
    y0 = np.concatenate([np.zeros(d), [0.0, 1.0]])
    s0 = np.concatenate([ones + scaled_c, [1.0, 1.0]])
    return ModifiedLp(A_bar, b_bar, c_bar, float(gamma), x0, y0, s0, source=inst)


@dataclass(frozen=True)
class Recovery:
    x_hat: np.ndarray
    obj_gap_bound: float
    feas_bound: float


def recover(x_bar, inst, gamma):
    """Map a modified-program point back: ``x_hat = R * x_bar[:n]``.

    Also returns the guarantees ``L R gamma`` on the objective gap and
    ``2 gamma (R sum|A_ij| + ||b||_1)`` on ``||A x_hat - b||_1``, valid
    when the caller certifies ``sum x_bar_i s_bar_i <= gamma**2``.
    """
    x_bar = as_vector(x_bar, "x_bar")
    if x_bar.shape[0] != inst.n + 2:
        raise ShapeError(f"x_bar has length {x_bar.shape[0]}, expected {inst.n + 2}")
    x_hat = inst.R * x_bar[: inst.n]
    obj = inst.L * inst.R * gamma
    feas = 2.0 * gamma * (inst.R * np.sum(np.abs(inst.A)) + np.sum(np.abs(inst.b)))
    return Recovery(x_hat, float(obj), float(feas))
