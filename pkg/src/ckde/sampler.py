"""Sampling from a Gaussian KDE under a linear equality constraint.

``prepare`` does all the per-constraint work once: it rotates the data with
the constraint's SVD, partitions the rotated precision matrix, forms its
Schur complement, turns the per-point exponents into alias tables, and
shifts every kernel mean into the free subspace. ``draw_many`` then costs
O(1) per sample with respect to the number of data points.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import _kernels
from .constraint import ConstraintDecomposition, LinearConstraint, decompose, embed
from .errors import DimensionMismatch, InvalidArgument, NumericalBreakdown
from .kde import GaussianKde


@dataclass(frozen=True)
class RotatedPrecision:
    """Blocks of V' H^-1 V split along (pinned, free) rotated coordinates.

    ``schur`` is ``q_cc - q_cf @ inv(q_ff) @ q_fc`` and drives the per-point
    weights; ``chol_ff`` is the lower Cholesky factor of ``q_ff`` used to
    sample with covariance inv(q_ff) without ever forming that inverse.
    """

    q_cc: np.ndarray
    q_cf: np.ndarray
    q_fc: np.ndarray
    q_ff: np.ndarray
    schur: np.ndarray
    chol_ff: np.ndarray


@dataclass(frozen=True)
class SamplerState:
    """Everything precomputed for constraint-satisfying draws.

    Immutable and freely shareable; concurrent draws just need independent
    random generators. ``log_weights`` is shifted so its maximum is zero;
    ``max_log_weight`` keeps the shift so unnormalized weights can be
    recovered when they do not underflow.
    """

    dec: ConstraintDecomposition
    prec: RotatedPrecision
    log_weights: np.ndarray
    max_log_weight: float
    alias_prob: np.ndarray
    alias_idx: np.ndarray
    translated_means: np.ndarray
    mean_shift: np.ndarray
    scale: np.ndarray
    constraint: LinearConstraint

    @property
    def n(self) -> int:
        return self.log_weights.shape[0]

    @property
    def n_free(self) -> int:
        return self.translated_means.shape[1]

    def weights(self) -> np.ndarray:
        """Shifted weights in (0, 1], the largest exactly 1."""
        return np.exp(self.log_weights)

    def to_raw(self, coords: np.ndarray) -> np.ndarray:
        """Map points from the KDE's coordinate system back to raw units."""
        return coords * self.scale + self.mean_shift


@dataclass(frozen=True)
class SamplerDiagnostics:
    """Health report of the precomputed weights."""

    ess: float
    max_log_weight: float
    n_active_weights: int
    low_ess: bool


_MAX_CONDITION = 1e12


def prepare(kde: GaussianKde, constraint: LinearConstraint) -> SamplerState:
    """Precompute rotation, precision blocks, weights, alias tables, and
    translated kernel means for a constraint given in raw units.

    Cost is O(N d^2) time and O(N d) memory.

    :raises NumericalBreakdown: the free-block precision is not numerically
        positive definite or is too ill-conditioned to trust.
    """
    if constraint.dim != kde.dim:
        raise DimensionMismatch(
            f"constraint acts on {constraint.dim} coordinates, data has {kde.dim}"
        )
    data = kde.data
    if data.standardized:
        mean_shift, scale = data.mean, data.std
        working = constraint.scaled(scale, mean_shift)
    else:
        mean_shift = np.zeros(kde.dim)
        scale = np.ones(kde.dim)
        working = constraint
    dec = decompose(working)

    points = data.points
    pinned_parts = points @ dec.v_fixed
    free_parts = points @ dec.v_free

    hinv = kde.bandwidth.inverse
    q_cc = dec.v_fixed.T @ hinv @ dec.v_fixed
    q_cf = dec.v_fixed.T @ hinv @ dec.v_free
    q_fc = q_cf.T.copy()
    q_ff = dec.v_free.T @ hinv @ dec.v_free
    q_ff = 0.5 * (q_ff + q_ff.T)
    try:
        chol_ff = cholesky(q_ff, lower=True)
    except Exception as exc:
        raise NumericalBreakdown("free-block precision is not positive definite") from exc
    if np.linalg.cond(q_ff) > _MAX_CONDITION:
        raise NumericalBreakdown("free-block precision is too ill-conditioned")
    ff_inv_fc = solve_triangular(
        chol_ff.T, solve_triangular(chol_ff, q_fc, lower=True), lower=False
    )
    schur = q_cc - q_cf @ ff_inv_fc
    schur = 0.5 * (schur + schur.T)
    try:
        cholesky(schur, lower=True)
    except Exception as exc:
        raise NumericalBreakdown("weight-exponent matrix is not positive definite") from exc
    prec = RotatedPrecision(q_cc, q_cf, q_fc, q_ff, schur, chol_ff)

    diffs = np.ascontiguousarray(dec.fixed_coords - pinned_parts)
    log_w = _kernels.weight_exponents(diffs, schur)
    shift = float(log_w.max())
    log_w = log_w - shift
    weights = np.exp(log_w)
    alias_prob, alias_idx = _kernels.alias_build(weights)

    translated = free_parts - diffs @ ff_inv_fc.T

    for arr in (log_w, alias_prob, alias_idx, translated):
        arr.flags.writeable = False
    return SamplerState(
        dec=dec,
        prec=prec,
        log_weights=log_w,
        max_log_weight=shift,
        alias_prob=alias_prob,
        alias_idx=alias_idx,
        translated_means=translated,
        mean_shift=mean_shift,
        scale=scale,
        constraint=constraint,
    )


def draw_many(state: SamplerState, rng: np.random.Generator, m: int) -> np.ndarray:
    """Draw m constraint-satisfying samples in raw units.

    Deterministic for a given generator state. Per draw: one alias lookup,
    one Gaussian perturbation with covariance inv(q_ff), one rotation back.
    """
    if m < 1:
        raise InvalidArgument("sample count must be at least 1")
    u = rng.random(m)
    v = rng.random(m)
    noise = rng.standard_normal((m, state.n_free))
    idx = _kernels.alias_pick(state.alias_prob, state.alias_idx, u, v)
    # y = L^-T z has covariance inv(L L') = inv(q_ff).
    perturb = solve_triangular(state.prec.chol_ff, noise.T, lower=True, trans="T").T
    free = state.translated_means[idx] + perturb
    return state.to_raw(embed(state.dec, free))


def draw(state: SamplerState, rng: np.random.Generator) -> np.ndarray:
    """Draw one constraint-satisfying sample in raw units."""
    return draw_many(state, rng, 1)[0]


def diagnostics(state: SamplerState) -> SamplerDiagnostics:
    """Summarize weight health: effective sample size, pre-shift peak
    log-weight, and the count of non-negligible weights.

    ``low_ess`` flags an effective sample size below 10, which means the
    constraint sits far from the data support.
    """
    w = state.weights()
    total = float(w.sum())
    ess = total * total / float((w * w).sum())
    active = int(np.count_nonzero(w > 1e-12))
    return SamplerDiagnostics(
        ess=ess,
        max_log_weight=state.max_log_weight,
        n_active_weights=active,
        low_ess=bool(ess < 10.0),
    )
