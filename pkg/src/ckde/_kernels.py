"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a vectorized pure-numpy version and a loop
version compiled with numba. The active backend is chosen once at import
time from the CKDE_BACKEND environment variable:

* ``auto``  (default) - numba when importable, numpy otherwise
* ``numba`` - force numba, fail loudly if it is missing
* ``numpy`` - force the pure-numpy fallback

Both backends of a kernel compute the same quantity; they may differ by a
few ulps because summation order differs. ``benchmarks/bench_kernels.py``
compares their throughput.
"""

import math
import os
import warnings

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

_LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def weight_exponents_numpy(diffs: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Per-row quadratic exponents -0.5 * diffs[i] @ quad @ diffs[i]."""
    return -0.5 * np.einsum("ij,ij->i", diffs @ quad, diffs)


def alias_build_numpy(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build Vose alias tables (prob, alias) from non-negative weights."""
    n = weights.shape[0]
    scaled = weights / weights.sum() * n
    prob = np.empty(n, dtype=np.float64)
    alias = np.zeros(n, dtype=np.int64)
    small: list[int] = []
    large: list[int] = []
    for i in range(n):
        (small if scaled[i] < 1.0 else large).append(i)
    while small and large:
        lo = small.pop()
        hi = large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        (small if scaled[hi] < 1.0 else large).append(hi)
    # Leftovers sit at probability 1 up to rounding.
    for rest in (large, small):
        while rest:
            g = rest.pop()
            prob[g] = 1.0
            alias[g] = g
    return prob, alias


def alias_pick_numpy(prob, alias, u, v) -> np.ndarray:
    """Map uniform pairs (u, v) to category indices through alias tables."""
    n = prob.shape[0]
    idx = np.minimum((u * n).astype(np.int64), n - 1)
    return np.where(v < prob[idx], idx, alias[idx])


def loo_scores_numpy(points: np.ndarray, h_values: np.ndarray) -> np.ndarray:
    """Leave-one-out log-likelihood of isotropic bandwidth candidates.

    Needs O(N^2) memory for the pairwise distance matrix.
    """
    n, d = points.shape
    dist2 = cdist(points, points, metric="sqeuclidean")
    out = np.empty(len(h_values))
    for ci, h in enumerate(h_values):
        expo = dist2 * (-0.5 / (h * h))
        np.fill_diagonal(expo, -np.inf)
        row_lse = logsumexp(expo, axis=1)
        out[ci] = row_lse.sum() + n * (
            -d * math.log(h) - 0.5 * d * _LOG_2PI - math.log(n - 1.0)
        )
    return out


def log_density_sums_numpy(queries: np.ndarray, data: np.ndarray) -> np.ndarray:
    """logsumexp_j(-0.5 * ||q_i - x_j||^2) per query, in whitened coordinates."""
    m = queries.shape[0]
    n = data.shape[0]
    out = np.empty(m)
    # Chunk the query axis so the temporary distance block stays modest.
    chunk = max(1, min(m, int(4_000_000 / max(n, 1)) + 1))
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        expo = cdist(queries[lo:hi], data, metric="sqeuclidean") * -0.5
        out[lo:hi] = logsumexp(expo, axis=1)
    return out


# ---------------------------------------------------------------------------
# loop implementations (numba-compilable source)
# ---------------------------------------------------------------------------

def _weight_exponents_loops(diffs, quad):
    n, p = diffs.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for a in range(p):
            s = 0.0
            for b in range(p):
                s += quad[a, b] * diffs[i, b]
            acc += diffs[i, a] * s
        out[i] = -0.5 * acc
    return out


def _alias_build_loops(weights):
    n = weights.shape[0]
    total = 0.0
    for i in range(n):
        total += weights[i]
    scaled = np.empty(n)
    for i in range(n):
        scaled[i] = weights[i] / total * n
    prob = np.empty(n)
    alias = np.zeros(n, dtype=np.int64)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        lo = small[ns]
        nl -= 1
        hi = large[nl]
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small[ns] = hi
            ns += 1
        else:
            large[nl] = hi
            nl += 1
    while nl > 0:
        nl -= 1
        g = large[nl]
        prob[g] = 1.0
        alias[g] = g
    while ns > 0:
        ns -= 1
        g = small[ns]
        prob[g] = 1.0
        alias[g] = g
    return prob, alias


def _alias_pick_loops(prob, alias, u, v):
    m = u.shape[0]
    n = prob.shape[0]
    out = np.empty(m, dtype=np.int64)
    for t in range(m):
        i = np.int64(u[t] * n)
        if i >= n:
            i = n - 1
        if v[t] < prob[i]:
            out[t] = i
        else:
            out[t] = alias[i]
    return out


def _loo_scores_loops(points, h_values):
    n, d = points.shape
    dist2 = np.empty((n, n))
    for i in range(n):
        dist2[i, i] = 0.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = points[i, k] - points[j, k]
                acc += diff * diff
            dist2[i, j] = acc
            dist2[j, i] = acc
    out = np.empty(len(h_values))
    for ci in range(len(h_values)):
        h = h_values[ci]
        scale = -0.5 / (h * h)
        total = 0.0
        for i in range(n):
            mx = -np.inf
            for j in range(n):
                if j != i:
                    e = dist2[i, j] * scale
                    if e > mx:
                        mx = e
            s = 0.0
            for j in range(n):
                if j != i:
                    s += math.exp(dist2[i, j] * scale - mx)
            total += mx + math.log(s)
        out[ci] = total + n * (
            -d * math.log(h) - 0.5 * d * _LOG_2PI - math.log(n - 1.0)
        )
    return out


def _log_density_sums_loops(queries, data):
    m, d = queries.shape
    n = data.shape[0]
    out = np.empty(m)
    row = np.empty(n)
    for q in range(m):
        mx = -np.inf
        for j in range(n):
            acc = 0.0
            for k in range(d):
                diff = queries[q, k] - data[j, k]
                acc += diff * diff
            e = -0.5 * acc
            row[j] = e
            if e > mx:
                mx = e
        s = 0.0
        for j in range(n):
            s += math.exp(row[j] - mx)
        out[q] = mx + math.log(s)
    return out


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

def _select_backend() -> str:
    requested = os.environ.get("CKDE_BACKEND", "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        warnings.warn(
            f"unknown CKDE_BACKEND={requested!r}; falling back to 'auto'",
            stacklevel=2,
        )
        requested = "auto"
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise ImportError("CKDE_BACKEND=numba but numba is not installed")
        return "numpy"
    return "numba"


ACTIVE_BACKEND = _select_backend()

if ACTIVE_BACKEND == "numba":
    from numba import njit

    weight_exponents_numba = njit(cache=True)(_weight_exponents_loops)
    alias_build_numba = njit(cache=True)(_alias_build_loops)
    alias_pick_numba = njit(cache=True)(_alias_pick_loops)
    loo_scores_numba = njit(cache=True)(_loo_scores_loops)
    log_density_sums_numba = njit(cache=True)(_log_density_sums_loops)

    weight_exponents = weight_exponents_numba
    alias_build = alias_build_numba
    alias_pick = alias_pick_numba
    loo_scores = loo_scores_numba
    log_density_sums = log_density_sums_numba
else:
    weight_exponents = weight_exponents_numpy
    alias_build = alias_build_numpy
    alias_pick = alias_pick_numpy
    loo_scores = loo_scores_numpy
    log_density_sums = log_density_sums_numpy


def warm_up() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    pts = np.array([[0.0, 0.5], [1.0, -0.5], [0.2, 0.1]])
    diffs = pts - pts.mean(axis=0)
    weight_exponents(diffs, np.eye(2))
    prob, alias = alias_build(np.array([0.5, 1.0, 0.25]))
    alias_pick(prob, alias, np.array([0.1, 0.9]), np.array([0.4, 0.6]))
    loo_scores(pts, np.array([0.5, 1.0]))
    log_density_sums(pts[:2], pts)
