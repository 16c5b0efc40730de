"""Brute-force references for checking the constrained sampler.

These deliberately avoid the sampler's own machinery: the conditional
density is evaluated directly on a grid along the constraint line, and
rejection sampling accepts unconstrained draws inside a thin slab around
the constraint. Both serve as independent oracles in the test suite.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .constraint import LinearConstraint, decompose, embed
from .errors import (
    AcceptanceTooLow,
    DimensionMismatch,
    EmptyInput,
    InvalidArgument,
    UnsupportedDimension,
)
from .kde import GaussianKde


@dataclass(frozen=True)
class GridDensity:
    """A normalized density sampled on a strictly increasing 1-D grid.

    The abscissa is the free coordinate along the constraint line, expressed
    in the KDE's own coordinate system (raw units when the KDE was built on
    raw data). ``normalization`` is the trapezoid integral that was divided
    out.
    """

    grid: np.ndarray
    values: np.ndarray
    normalization: float

    def bin_probabilities(self, edges: np.ndarray) -> np.ndarray:
        """Exact integrals of the piecewise-linear density over each bin."""
        merged = np.union1d(self.grid, edges)
        vals = np.interp(merged, self.grid, self.values, left=0.0, right=0.0)
        cum = cumulative_trapezoid(vals, merged, initial=0.0)
        at_edges = np.interp(edges, merged, cum)
        return np.diff(at_edges)

    def to_csv(self, path) -> None:
        """Write two columns (abscissa, density) with a header row."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["abscissa", "density"])
            for x, y in zip(self.grid, self.values):
                writer.writerow([repr(float(x)), repr(float(y))])


def _working_constraint(kde: GaussianKde, constraint: LinearConstraint):
    if constraint.dim != kde.dim:
        raise DimensionMismatch(
            f"constraint acts on {constraint.dim} coordinates, data has {kde.dim}"
        )
    data = kde.data
    if data.standardized:
        return constraint.scaled(data.std, data.mean)
    return constraint


def conditional_density_line(
    kde: GaussianKde, constraint: LinearConstraint, grid
) -> GridDensity:
    """Normalized KDE density along a constraint that leaves one free
    dimension.

    Evaluates the KDE at the embedded grid points and divides by the
    trapezoid integral, giving the conditional density up to quadrature
    error. The constraint is given in raw units; the grid lives in the free
    coordinate produced by :func:`free_coordinates`.
    """
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if grid.size < 2 or np.any(np.diff(grid) <= 0.0):
        raise InvalidArgument("grid must be strictly increasing with at least 2 points")
    dec = decompose(_working_constraint(kde, constraint))
    if dec.n_free != 1:
        raise UnsupportedDimension(
            f"grid oracle needs exactly one free dimension, got {dec.n_free}"
        )
    points = embed(dec, grid[:, np.newaxis])
    # Normalize in log space so grids far from the data do not underflow.
    log_values = kde.log_density_many(points)
    peak = float(log_values.max())
    if not np.isfinite(peak):
        raise InvalidArgument("density vanishes on the whole grid")
    shifted = np.exp(log_values - peak)
    shifted_total = float(np.trapezoid(shifted, grid))
    values = shifted / shifted_total
    total = float(np.exp(peak + np.log(shifted_total)))
    grid = grid.copy()
    grid.flags.writeable = False
    values.flags.writeable = False
    return GridDensity(grid=grid, values=values, normalization=total)


def free_coordinates(kde: GaussianKde, constraint: LinearConstraint, samples) -> np.ndarray:
    """Project raw-unit samples onto the free coordinate(s) of a constraint.

    Inverse of the embedding used by :func:`conditional_density_line`, so the
    result is directly comparable with its grid.
    """
    dec = decompose(_working_constraint(kde, constraint))
    coords = kde.data.standardize_points(np.atleast_2d(np.asarray(samples, dtype=float)))
    free = coords @ dec.v_free
    return free[:, 0] if dec.n_free == 1 else free


def rejection_sample(
    kde: GaussianKde,
    constraint: LinearConstraint,
    epsilon: float,
    rng: np.random.Generator,
    m: int,
    max_tries: int,
) -> np.ndarray:
    """Accept unconstrained draws within an epsilon slab of the constraint,
    then project them exactly onto it. Returns m raw-unit samples.

    The slab test happens in the KDE's own coordinate system, so epsilon is
    commensurate with the bandwidth.

    :raises AcceptanceTooLow: fewer than m acceptances within max_tries
        proposals.
    """
    if epsilon <= 0.0:
        raise InvalidArgument("epsilon must be positive")
    if m < 1:
        raise InvalidArgument("sample count must be at least 1")
    working = _working_constraint(kde, constraint)
    dec = decompose(working)
    accepted: list[np.ndarray] = []
    n_have = 0
    tries = 0
    batch = int(min(max(10 * m, 10_000), 1_000_000))
    while n_have < m and tries < max_tries:
        take = min(batch, max_tries - tries)
        proposals = kde.sample(rng, take)
        tries += take
        residual = np.abs(proposals @ working.a.T - working.b).max(axis=1)
        hits = proposals[residual < epsilon]
        if hits.shape[0]:
            # Replace the pinned rotated block with its exact value.
            pinned = hits @ dec.v_fixed
            hits = hits - (pinned - dec.fixed_coords) @ dec.v_fixed.T
            accepted.append(hits)
            n_have += hits.shape[0]
    if n_have < m:
        raise AcceptanceTooLow(
            f"accepted {n_have}/{m} samples after {tries} proposals"
        )
    out = np.vstack(accepted)[:m]
    return kde.data.destandardize(out)


def histogram_distance(samples, oracle: GridDensity, bins: int) -> float:
    """Total-variation estimate between a sample histogram and a grid
    density, binned over the grid span.

    Sample mass outside the span counts fully toward the distance, so
    disjoint supports score 1 up to binning error.
    """
    if bins < 5:
        raise InvalidArgument("need at least 5 bins")
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyInput("no samples to bin")
    span = (float(oracle.grid[0]), float(oracle.grid[-1]))
    counts, edges = np.histogram(x, bins=bins, range=span)
    p_hist = counts / x.size
    p_oracle = oracle.bin_probabilities(edges)
    p_outside = max(0.0, 1.0 - float(p_hist.sum()))
    return 0.5 * (float(np.abs(p_hist - p_oracle).sum()) + p_outside)
