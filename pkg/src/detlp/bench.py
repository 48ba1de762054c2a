"""Synthetic drift sequences fed straight into a maintainer.

Every sequence obeys ``||(u_{k+1} - u_k) / u_k||_2 <= C`` with each entry
moving by at most a factor 1/4 per step.  The bench reports how many
rank-k rebuilds the maintainer performed, which is what the amortized
analysis of the power-of-two reset rule bounds.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .linalg import rank
from .maintenance import ProjectionMaintainer, ResetStrategy, ScalarMap
from .rng import SplitMix64


def adversarial_sequence(n, m, C, steps, u0=None, signs=None):
    """The first ``m`` coordinates move by a factor ``1 +- C/sqrt(m)`` every
    step (relative l2 change exactly C); the rest stay put.  ``signs``
    (length m, entries +-1) picks the directions, default all up.
    Yields steps+1 vectors."""
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    if C / math.sqrt(m) > 0.25:
        raise DomainError("per-entry drift would exceed 1/4")
    u = np.ones(n) if u0 is None else np.array(u0, dtype=float)
    factor = np.ones(n)
    sgn = np.ones(m) if signs is None else np.sign(np.asarray(signs, dtype=float))
    factor[:m] += sgn * (C / math.sqrt(m))
    yield u.copy()
    for _ in range(steps):
        u = u * factor
        yield u.copy()


def persistent_sequence(n, C, steps, seed, period=50, power=3):
    """Drift along a random direction that is redrawn every ``period``
    steps; relative l2 change per step is exactly C.  Raising the raw
    uniform draws to ``power`` spreads the per-coordinate speeds out."""
    rng = SplitMix64(seed)
    u = np.ones(n)
    yield u.copy()
    g = None
    for k in range(steps):
        if k % period == 0:
            g = np.array(rng.uniform(-1.0, 1.0, n))
            g = np.sign(g) * np.abs(g) ** power
            g *= C / math.sqrt(float(g @ g))
            g = np.clip(g, -0.25, 0.25)
        u = u * (1.0 + g)
        yield u.copy()


def band_violations(u_ref, u, eps):
    """Indices with ``u_i`` outside ``[(1 - eps) u_ref_i, (1 + eps) u_ref_i]``."""
    u_ref = np.asarray(u_ref, dtype=float)
    u = np.asarray(u, dtype=float)
    return int(np.count_nonzero((u > (1.0 + eps) * u_ref) | (u < (1.0 - eps) * u_ref)))


def random_full_rank(d, n, rng):
    for _ in range(100):
        A = np.array(rng.uniform(-1.0, 1.0, d * n)).reshape(d, n)
        if rank(A) == d:
            return A
    raise DomainError("could not draw a full-rank matrix")


@dataclass(frozen=True)
class BenchResult:
    n: int
    steps: int
    C: float
    eps_mp: float
    strategy: str
    seed: int
    power: int
    rebuild_ranks: dict  # str(k) -> count
    weighted: dict  # str(k) -> count(k) * sqrt(k), k = 2^ell
    normalizer: float  # T * (C / eps_mp) * ln n
    max_ratio: float
    stats: dict

    def as_dict(self):
        return asdict(self)


def amortized_bench(n=64, steps=2000, C=0.01, eps_mp=0.05, seed=0, strategy="pow2", a=2.0 / 3.0,
                    period=50, power=3):
    """Drive a maintainer (f = sqrt, v = u) through a persistent drift
    sequence and tabulate rebuilds by rank."""
    strategy = ResetStrategy.parse(strategy)
    rng = SplitMix64(seed)
    A = random_full_rank(max(1, n // 2), n, rng)
    seq = persistent_sequence(n, C, steps, seed + 1, period=period, power=power)
    u0 = next(seq)
    mp = ProjectionMaintainer(A, u0, ScalarMap.sqrt(), u0, eps_mp, a=a, strategy=strategy)
    for u in seq:
        mp.update(u, u)
    st = mp.stats()
    norm = steps * (C / eps_mp) * math.log(n)
    weighted = {}
    for k, cnt in st.rebuild_ranks.items():
        ell = math.log2(k)
        weighted[str(k)] = cnt * 2.0 ** (ell / 2.0)
    ratio = max(weighted.values(), default=0.0) / norm
    return BenchResult(
        n=n, steps=steps, C=C, eps_mp=eps_mp, strategy=strategy.name.lower(), seed=seed, power=power,
        rebuild_ranks={str(k): v for k, v in sorted(st.rebuild_ranks.items())},
        weighted=weighted, normalizer=norm, max_ratio=ratio, stats=st.as_dict(),
    )


def _bench_worker(kwargs):
    return amortized_bench(**kwargs).as_dict()


def run_bench(repeats=1, workers=1, **kwargs):
    """Independent maintainers on seeds ``seed, seed+1, ...``."""
    base = kwargs.pop("seed", 0)
    jobs = [dict(kwargs, seed=base + i) for i in range(repeats)]
    if workers > 1 and repeats > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_bench_worker, jobs))
    return [_bench_worker(j) for j in jobs]
