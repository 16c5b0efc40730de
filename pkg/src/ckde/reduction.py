"""Truncated-SVD parameter reduction for high-dimensional scenario vectors.

Long parameter vectors (e.g. 51-sample speed profiles) are centered and
projected onto their leading singular directions. The low-dimensional
coefficients are what the KDE is fitted on; decoding maps sampled
coefficients back to full profiles. Endpoint constraints (initial speed,
initial acceleration, end speed) become linear constraints on the reduced
coefficients, so decoded profiles hit their endpoints exactly.
"""

import json
from dataclasses import dataclass

import numpy as np

from .constraint import LinearConstraint
from .errors import (
    DegenerateData,
    DimensionMismatch,
    InvalidArgument,
    OverConstrained,
)

KIND_INIT_SPEED_ACCEL = "init-speed-accel"
KIND_INIT_END_SPEED = "init-end-speed"


@dataclass(frozen=True)
class ReducedBasis:
    """Affine map between reduced coefficients and full parameter vectors.

    ``decode(v) = modes @ diag(scales) @ v + mean`` where ``modes`` holds the
    leading left singular vectors (columns, orthonormal) and ``scales`` the
    corresponding singular values of the centered data matrix.
    """

    mean: np.ndarray
    modes: np.ndarray
    scales: np.ndarray

    @property
    def n_components(self) -> int:
        return self.modes.shape[1]

    @property
    def full_dim(self) -> int:
        return self.modes.shape[0]

    def save_json(self, path) -> None:
        payload = {
            "mu": self.mean.tolist(),
            "UB1": self.modes.tolist(),
            "SB1": self.scales.tolist(),
            "d_red": self.n_components,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "ReducedBasis":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        basis = cls(
            mean=np.asarray(payload["mu"], dtype=np.float64),
            modes=np.asarray(payload["UB1"], dtype=np.float64),
            scales=np.asarray(payload["SB1"], dtype=np.float64),
        )
        if basis.n_components != int(payload["d_red"]):
            raise InvalidArgument("basis file is inconsistent: d_red does not match UB1")
        return basis


def fit_reduced_basis(raw, n_components: int) -> tuple[ReducedBasis, np.ndarray]:
    """Center the rows of ``raw`` and keep the top singular directions.

    Returns the basis plus the reduced coordinates of each row, i.e. the
    coefficients v_i with ``raw[i] ~= modes @ diag(scales) @ v_i + mean``.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise InvalidArgument("expected an N-by-D matrix of parameter vectors")
    n, full_dim = raw.shape
    if n < 2:
        raise InvalidArgument("need at least two parameter vectors")
    if not (1 <= n_components <= min(n, full_dim)):
        raise InvalidArgument(
            f"reduced dimension must be in [1, {min(n, full_dim)}], got {n_components}"
        )
    if not np.all(np.isfinite(raw)):
        raise InvalidArgument("parameter vectors must be finite")
    mean = raw.mean(axis=0)
    centered = raw - mean
    left, sing, right_t = np.linalg.svd(centered, full_matrices=False)
    # centered.T = right_t.T @ diag(sing) @ left.T, so the column-space modes
    # of the centered vectors are the rows of right_t.
    modes = np.ascontiguousarray(right_t[:n_components].T)
    scales = sing[:n_components].copy()
    coords = np.ascontiguousarray(left[:, :n_components])
    for arr in (mean, modes, scales, coords):
        arr.flags.writeable = False
    return ReducedBasis(mean=mean, modes=modes, scales=scales), coords


def decode(basis: ReducedBasis, coords) -> np.ndarray:
    """Map reduced coefficients (last axis) to full parameter vectors."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[-1] != basis.n_components:
        raise DimensionMismatch(
            f"got {coords.shape[-1]} coefficients, expected {basis.n_components}"
        )
    return coords @ (basis.modes * basis.scales).T + basis.mean


def encode(basis: ReducedBasis, x) -> np.ndarray:
    """Map full parameter vectors (last axis) to reduced coefficients.

    Exact inverse of :func:`decode` whenever ``x - mean`` lies in the span of
    the kept modes.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != basis.full_dim:
        raise DimensionMismatch(
            f"got {x.shape[-1]} parameters, expected {basis.full_dim}"
        )
    tiny = basis.full_dim * np.finfo(np.float64).eps * float(basis.scales.max(initial=0.0))
    if np.any(basis.scales <= tiny):
        raise DegenerateData("basis has singular values too close to zero to invert")
    return ((x - basis.mean) @ basis.modes) / basis.scales


def endpoint_constraint(
    basis: ReducedBasis, kind: str, values: tuple[float, float], dt: float
) -> LinearConstraint:
    """Linear constraint on reduced coefficients pinning profile endpoints.

    * ``init-speed-accel``: values = (initial speed, initial acceleration);
      the acceleration is the forward difference of the first two samples.
    * ``init-end-speed``: values = (initial speed, end speed).

    :param dt: sample spacing of the profiles, in seconds.
    """
    if dt <= 0.0:
        raise InvalidArgument("dt must be positive")
    if basis.n_components <= 2:
        raise OverConstrained(
            "endpoint constraints pin two coefficients; need a reduced dimension above 2"
        )
    first, second = float(values[0]), float(values[1])
    weighted = basis.modes * basis.scales
    if kind == KIND_INIT_SPEED_ACCEL:
        rows = weighted[[0, 1], :]
        rhs = np.array(
            [first - basis.mean[0], first + dt * second - basis.mean[1]]
        )
    elif kind == KIND_INIT_END_SPEED:
        rows = weighted[[0, basis.full_dim - 1], :]
        rhs = np.array([first - basis.mean[0], second - basis.mean[-1]])
    else:
        raise InvalidArgument(
            f"unknown constraint kind {kind!r}; expected "
            f"{KIND_INIT_SPEED_ACCEL!r} or {KIND_INIT_END_SPEED!r}"
        )
    return LinearConstraint(rows, rhs)
