"""Instance documents (JSON) and the seeded feasible-instance generator.

Document shape::

    {"n": int, "d": int, "A": [[...n] x d], "b": [...d], "c": [...n],
     "R": real (optional), "L": real (optional)}

A missing ``L`` defaults to ``max(||c||_inf, 1)``.  A missing ``R`` is
derived as twice the largest vertex l1-norm of the feasible polytope
(brute force, so only for n <= 24) and a warning is emitted.
"""

import json
import math
import numbers
import warnings

import numpy as np

from .errors import DomainError, NonFiniteError, RankError, SchemaError
from .homogenize import LpInstance
from .linalg import mat_mul, rank
from .oracle import BRUTE_FORCE_MAX_N, max_l1_over_polytope
from .rng import SplitMix64

MAX_RESAMPLES = 100
_KEYS = {"n", "d", "A", "b", "c", "R", "L"}


class InstanceWarning(UserWarning):
    pass


def _int_field(doc, key):
    if key not in doc:
        raise SchemaError(key, "required field is missing")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(key, f"expected an integer, got {type(v).__name__}")
    if v < 1:
        raise SchemaError(key, f"must be >= 1, got {v}")
    return v


def _real(v, path):
    if isinstance(v, bool) or not isinstance(v, numbers.Real):
        raise SchemaError(path, f"expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise NonFiniteError(f"{path}: non-finite value {v}")
    return v


def _real_list(v, length, path):
    if not isinstance(v, list):
        raise SchemaError(path, f"expected a list, got {type(v).__name__}")
    if len(v) != length:
        raise SchemaError(path, f"expected {length} entries, got {len(v)}")
    return [_real(e, f"{path}[{i}]") for i, e in enumerate(v)]


def parse_instance(doc):
    """Validate a document (JSON text or already-decoded dict) into an LpInstance."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    extra = set(doc) - _KEYS
    if extra:
        raise SchemaError(sorted(extra)[0], "unknown field")
    n = _int_field(doc, "n")
    d = _int_field(doc, "d")
    if d > n:
        raise SchemaError("d", f"need d <= n, got d={d}, n={n}")
    if "A" not in doc:
        raise SchemaError("A", "required field is missing")
    if not isinstance(doc["A"], list) or len(doc["A"]) != d:
        raise SchemaError("A", f"expected a list of {d} rows")
    A = np.array([_real_list(row, n, f"A[{i}]") for i, row in enumerate(doc["A"])]).reshape(d, n)
    for key, length in (("b", d), ("c", n)):
        if key not in doc:
            raise SchemaError(key, "required field is missing")
    b = np.array(_real_list(doc["b"], d, "b"))
    c = np.array(_real_list(doc["c"], n, "c"))
    r = rank(A)
    if r != d:
        raise RankError(r, d, f"A: rank {r} is below d={d}")

    L = _real(doc["L"], "L") if doc.get("L") is not None else max(float(np.max(np.abs(c))), 1.0)
    if doc.get("R") is not None:
        R = _real(doc["R"], "R")
    else:
        R = derive_R(A, b)
        warnings.warn(f"R not given; derived R = {R!r} from the polytope vertices", InstanceWarning, stacklevel=2)
    if not R > 0:
        raise SchemaError("R", f"must be positive, got {R}")
    if L < np.max(np.abs(c)):
        raise SchemaError("L", f"must be >= ||c||_inf = {np.max(np.abs(c))}, got {L}")
    return LpInstance(A, b, c, R, L)


def derive_R(A, b):
    n = A.shape[1]
    if n > BRUTE_FORCE_MAX_N:
        raise SchemaError("R", f"required when n > {BRUTE_FORCE_MAX_N}")
    m = max_l1_over_polytope(A, b)
    if m is None:
        raise DomainError("R: cannot derive, the polytope is empty or unbounded")
    return 2.0 * m if m > 0 else 1.0


def instance_to_dict(inst):
    return {
        "n": inst.n,
        "d": inst.d,
        "A": inst.A.tolist(),
        "b": inst.b.tolist(),
        "c": inst.c.tolist(),
        "R": inst.R,
        "L": inst.L,
    }


def dump_instance(inst):
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def generate_instance(n, d, seed):
    """Strictly primal and dual feasible instance, deterministic in ``seed``.

    Draw order from one SplitMix64 stream: A row-major (redrawn whole until
    rank d), x* in [0.5, 1.5]^n, y in [-1, 1]^d, s in [0.1, 2]^n.  Then
    b = A x*, c = A^T y + s, R = 2 ||x*||_1, L = max(||c||_inf, 1).
    """
    if not (isinstance(n, int) and isinstance(d, int)) or not n >= d >= 1:
        raise DomainError(f"need integers n >= d >= 1, got n={n}, d={d}")
    rng = SplitMix64(seed)
    for _ in range(MAX_RESAMPLES):
        A = np.array(rng.uniform(-1.0, 1.0, d * n)).reshape(d, n)
        if rank(A) == d:
            break
    else:
        raise RankError(rank(A), d, f"no rank-{d} matrix after {MAX_RESAMPLES} draws")
    x_star = np.array(rng.uniform(0.5, 1.5, n))
    y = np.array(rng.uniform(-1.0, 1.0, d))
    s = np.array(rng.uniform(0.1, 2.0, n))
    # fixed summation order so ports can match bit-for-bit
    b = mat_mul(A, x_star[:, None])[:, 0]
    c = mat_mul(A.T, y[:, None])[:, 0] + s
    R = 2.0 * sum(x_star.tolist())
    L = max(float(np.max(np.abs(c))), 1.0)
    return LpInstance(A, b, c, R, L)
