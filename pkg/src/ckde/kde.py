"""Gaussian kernel density estimation: data handling, bandwidth selection,
density evaluation, and unconstrained sampling.

All heavy evaluation goes through the kernels in :mod:`ckde._kernels`, so it
benefits from the numba backend when that is active.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from . import _kernels
from .errors import (
    DegenerateData,
    DimensionMismatch,
    InvalidArgument,
    TooFewPoints,
)

_LOG_2PI = math.log(2.0 * math.pi)


def _as_matrix(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, np.newaxis]
    if pts.ndim != 2:
        raise InvalidArgument("data points must form a 2-D array")
    return np.ascontiguousarray(pts)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DataSet:
    """An N-by-d matrix of observations plus its standardization statistics.

    ``mean`` and ``std`` always describe the original (raw) data, so a
    standardized set can be mapped back with ``destandardize``. Instances are
    immutable and safe to share across threads.
    """

    points: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    standardized: bool = False

    @classmethod
    def from_points(cls, points) -> "DataSet":
        """Wrap raw observations, recording their per-dimension mean and
        sample standard deviation.

        :param points: N-by-d array-like (a 1-D array is treated as N-by-1).
        """
        pts = _as_matrix(points)
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidArgument("need at least one point in at least one dimension")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgument("data points must be finite")
        mean = pts.mean(axis=0)
        if pts.shape[0] >= 2:
            std = pts.std(axis=0, ddof=1)
        else:
            std = np.ones(pts.shape[1])
        return cls(_freeze(pts), _freeze(mean), _freeze(std), standardized=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def standardize(self) -> "DataSet":
        """Return a copy whose points have zero mean and unit sample standard
        deviation per dimension.

        :raises TooFewPoints: with fewer than two points the sample standard
            deviation is undefined.
        :raises DegenerateData: if some dimension has zero variance.
        """
        if self.standardized:
            return self
        if self.n < 2:
            raise TooFewPoints("standardization needs at least two points")
        if np.any(self.std <= 0.0):
            raise DegenerateData("zero variance in at least one dimension")
        pts = (self.points - self.mean) / self.std
        return DataSet(_freeze(pts), self.mean, self.std, standardized=True)

    def destandardize(self, coords) -> np.ndarray:
        """Map points from this set's coordinate system back to raw units."""
        coords = np.asarray(coords, dtype=np.float64)
        if not self.standardized:
            return coords.copy()
        return coords * self.std + self.mean

    def standardize_points(self, raw) -> np.ndarray:
        """Map raw-unit points into this set's coordinate system."""
        raw = np.asarray(raw, dtype=np.float64)
        if not self.standardized:
            return raw.copy()
        return (raw - self.mean) / self.std


class BandwidthMatrix:
    """A positive-definite symmetric bandwidth matrix with cached inverse,
    Cholesky factor, and log-determinant."""

    def __init__(self, matrix):
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidArgument("bandwidth matrix must be square")
        if not np.all(np.isfinite(mat)):
            raise InvalidArgument("bandwidth matrix must be finite")
        scale = 1.0 + np.abs(mat).max()
        if np.abs(mat - mat.T).max() > 1e-12 * scale:
            raise InvalidArgument("bandwidth matrix must be symmetric")
        mat = 0.5 * (mat + mat.T)
        try:
            chol = cholesky(mat, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
            raise InvalidArgument("bandwidth matrix must be positive definite") from exc
        except Exception as exc:
            raise InvalidArgument("bandwidth matrix must be positive definite") from exc
        self.matrix = _freeze(mat)
        self.chol = _freeze(chol)
        self.inverse = _freeze(cho_solve((chol, True), np.eye(mat.shape[0])))
        self.log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))

    @classmethod
    def isotropic(cls, h: float, dim: int) -> "BandwidthMatrix":
        """Build h^2 * I for a scalar bandwidth h."""
        if h <= 0.0 or not math.isfinite(h):
            raise InvalidArgument("scalar bandwidth must be positive and finite")
        return cls(h * h * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def whiten(self, coords: np.ndarray) -> np.ndarray:
        """Map coordinates u so that squared kernel distance becomes ||u||^2."""
        return solve_triangular(self.chol, np.atleast_2d(coords).T, lower=True).T


def _iqr(values: np.ndarray) -> float:
    # Linear-interpolation quantiles (position (N-1)*p), numpy's default.
    q75, q25 = np.percentile(values, [75.0, 25.0])
    return float(q75 - q25)


def silverman_bandwidth(data: DataSet, dim: int | None = None) -> BandwidthMatrix:
    """Rule-of-thumb isotropic bandwidth h^2 * I with
    h = 1.06 * min(sigma, R/1.34) * N^(-1/5).

    sigma and R (interquartile range) are taken per dimension of the stored
    points; with ``dim`` given only that dimension's rule is used, otherwise
    the geometric mean of the per-dimension values.

    :param data: the observations (standardize first for mixed-scale data).
    :param dim: optional dimension index; None pools all dimensions.
    """
    if data.n < 2:
        raise TooFewPoints("bandwidth selection needs at least two points")
    pts = data.points
    sigma = pts.std(axis=0, ddof=1)
    if dim is not None:
        if not 0 <= dim < data.dim:
            raise InvalidArgument(f"dimension index {dim} out of range")
        cols = [dim]
    else:
        cols = list(range(data.dim))
    if np.any(sigma[cols] <= 0.0):
        raise DegenerateData("zero variance in at least one dimension")
    n_factor = float(data.n) ** (-0.2)
    h_per_dim = [
        1.06 * min(sigma[k], _iqr(pts[:, k]) / 1.34) * n_factor for k in cols
    ]
    if np.any(np.asarray(h_per_dim) <= 0.0):
        raise DegenerateData("interquartile range collapsed to zero")
    h = float(np.exp(np.mean(np.log(h_per_dim))))
    return BandwidthMatrix.isotropic(h, data.dim)


def loo_cv_scores(data: DataSet, h_candidates) -> np.ndarray:
    """Leave-one-out log-likelihood of each isotropic candidate bandwidth.

    The score of h is sum_i log[(1/(N-1)) * sum_{j != i} K_h(x_i - x_j)].
    Requires O(N^2) memory for pairwise distances.
    """
    hs = np.asarray(h_candidates, dtype=np.float64).ravel()
    if hs.size == 0:
        raise InvalidArgument("candidate list must not be empty")
    if np.any(hs <= 0.0) or not np.all(np.isfinite(hs)):
        raise InvalidArgument("candidate bandwidths must be positive and finite")
    if data.n < 2:
        raise TooFewPoints("cross validation needs at least two points")
    pts = np.ascontiguousarray(data.points)
    spread = pts.max(axis=0) - pts.min(axis=0)
    if np.all(spread == 0.0):
        raise DegenerateData("all points identical; the score diverges as h -> 0")
    return _kernels.loo_scores(pts, hs)


def loo_cv_bandwidth(data: DataSet, h_candidates) -> BandwidthMatrix:
    """Pick the candidate h maximizing the leave-one-out log-likelihood and
    return h^2 * I. Ties go to the smaller candidate."""
    hs = np.asarray(h_candidates, dtype=np.float64).ravel()
    scores = loo_cv_scores(data, hs)
    order = np.argsort(hs, kind="stable")
    best = order[0]
    for idx in order[1:]:
        if scores[idx] > scores[best]:
            best = idx
    return BandwidthMatrix.isotropic(float(hs[best]), data.dim)


class GaussianKde:
    """Gaussian kernel density estimate over a data set.

    The density is ``norm_const * sum_i exp(-0.5 (x-x_i)' H^-1 (x-x_i))``
    with ``norm_const = 1 / (N (2 pi)^(d/2) det(H)^(1/2))``. All evaluation
    and sampling happens in the coordinate system of the stored points;
    callers that standardized their data are responsible for mapping results
    back (the constrained sampler does this automatically).

    Immutable after construction; sampling takes a caller-owned generator.
    """

    def __init__(self, data: DataSet, bandwidth: BandwidthMatrix):
        if bandwidth.dim != data.dim:
            raise DimensionMismatch(
                f"bandwidth is {bandwidth.dim}-dimensional, data is {data.dim}-dimensional"
            )
        self.data = data
        self.bandwidth = bandwidth
        self._log_norm_const = -(
            math.log(data.n) + 0.5 * data.dim * _LOG_2PI + 0.5 * bandwidth.log_det
        )
        # Whitened copy of the data so kernel distances are plain euclidean.
        self._white_points = _freeze(
            np.ascontiguousarray(bandwidth.whiten(data.points))
        )

    @property
    def norm_const(self) -> float:
        return math.exp(self._log_norm_const)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def dim(self) -> int:
        return self.data.dim

    def _check_query(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"query has {arr.shape[-1]} coordinates, expected {self.dim}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("query points must be finite")
        return arr

    def log_density_many(self, xs) -> np.ndarray:
        """Log density at each row of ``xs``."""
        xs = np.atleast_2d(self._check_query(xs))
        white = np.ascontiguousarray(self.bandwidth.whiten(xs))
        return self._log_norm_const + _kernels.log_density_sums(white, self._white_points)

    def density_many(self, xs) -> np.ndarray:
        """Density at each row of ``xs``."""
        return np.exp(self.log_density_many(xs))

    def density(self, x) -> float:
        """Density at a single point."""
        arr = self._check_query(x)
        if arr.ndim != 1:
            raise DimensionMismatch("density() takes a single point; use density_many")
        return float(self.density_many(arr[np.newaxis, :])[0])

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Draw m points: pick a data point uniformly, add kernel noise.

        Deterministic for a given generator state; rows are returned in the
        coordinate system of the stored points.
        """
        if m < 1:
            raise InvalidArgument("sample count must be at least 1")
        idx = rng.integers(0, self.n, size=m)
        noise = rng.standard_normal((m, self.dim))
        return self.data.points[idx] + noise @ self.bandwidth.chol.T
