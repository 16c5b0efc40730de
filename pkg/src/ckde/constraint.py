"""Linear equality constraints and their SVD split into fixed and free
directions.

A constraint ``A x = b`` with fewer rows than columns leaves a free affine
subspace. The singular value decomposition of A yields an orthonormal basis
in which the first block of rotated coordinates is pinned by the constraint
while the remaining block may take any value.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InconsistentConstraint,
    InvalidArgument,
    OverConstrained,
)


@dataclass(frozen=True)
class LinearConstraint:
    """The requirement ``a @ x == b`` on sampled vectors."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64)).ravel()
        if a.ndim != 2:
            raise InvalidArgument("constraint matrix must be 2-D")
        n_c, d = a.shape
        if n_c < 1:
            raise InvalidArgument("constraint needs at least one row")
        if n_c >= d:
            raise OverConstrained(
                f"{n_c} constraints on {d} coordinates leave nothing to sample"
            )
        if b.shape[0] != n_c:
            raise DimensionMismatch(
                f"constraint vector has {b.shape[0]} entries for {n_c} rows"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidArgument("constraint entries must be finite")
        a = a.copy()
        b = b.copy()
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_constraints(self) -> int:
        return self.a.shape[0]

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    def residual(self, x) -> np.ndarray:
        """``a @ x - b`` for one point or a batch of row vectors."""
        x = np.asarray(x, dtype=np.float64)
        return x @ self.a.T - self.b

    def scaled(self, scale, shift) -> "LinearConstraint":
        """Re-express the constraint for coordinates ``u = (x - shift)/scale``."""
        scale = np.asarray(scale, dtype=np.float64)
        shift = np.asarray(shift, dtype=np.float64)
        return LinearConstraint(self.a * scale, self.b - self.a @ shift)


@dataclass(frozen=True)
class ConstraintDecomposition:
    """SVD factors of an effective full-rank constraint.

    ``u @ diag(singular_values) @ v_fixed.T`` reconstructs the effective
    constraint matrix; ``v_free`` spans the directions the constraint leaves
    open; ``fixed_coords`` is the pinned rotated block.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v_fixed: np.ndarray
    v_free: np.ndarray
    fixed_coords: np.ndarray
    effective: LinearConstraint

    @property
    def n_fixed(self) -> int:
        return self.v_fixed.shape[1]

    @property
    def n_free(self) -> int:
        return self.v_free.shape[1]

    @property
    def dim(self) -> int:
        return self.v_fixed.shape[0]


def decompose(constraint: LinearConstraint) -> ConstraintDecomposition:
    """Split coordinates into constraint-pinned and free rotated blocks.

    Rank-deficient but consistent systems are reduced to an equivalent
    full-rank constraint first; inconsistent ones are rejected.

    :raises InconsistentConstraint: rank-deficient system with no solution.
    :raises OverConstrained: the effective rank fixes every coordinate.
    """
    a = constraint.a
    b = constraint.b
    n_c, d = a.shape
    u_full, sing, vt = np.linalg.svd(a, full_matrices=True)
    tol = max(n_c, d) * np.finfo(np.float64).eps * (sing[0] if sing.size else 0.0)
    rank = int(np.sum(sing > tol))
    if rank == 0:
        raise InvalidArgument("constraint matrix is zero")
    if rank >= d:
        raise OverConstrained("constraint has full column rank; nothing is free")
    rotated_rhs = u_full.T @ b
    if rank < n_c:
        slack = np.abs(rotated_rhs[rank:]).max() if rank < rotated_rhs.size else 0.0
        if slack > 1e-8 * (1.0 + float(np.linalg.norm(b))):
            raise InconsistentConstraint(
                "right-hand side is outside the column space of the constraint matrix"
            )
    sing = sing[:rank]
    v_fixed = np.ascontiguousarray(vt[:rank].T)
    v_free = np.ascontiguousarray(vt[rank:].T)
    fixed_coords = rotated_rhs[:rank] / sing
    if rank < n_c:
        # The surviving rows already form a full-rank system in rotated form.
        effective = LinearConstraint(sing[:, np.newaxis] * v_fixed.T, rotated_rhs[:rank])
        u = np.eye(rank)
    else:
        effective = constraint
        u = u_full
    for arr in (u, sing, v_fixed, v_free, fixed_coords):
        arr.flags.writeable = False
    return ConstraintDecomposition(u, sing, v_fixed, v_free, fixed_coords, effective)


def embed(dec: ConstraintDecomposition, free_coords) -> np.ndarray:
    """Assemble full vectors from free coordinates; the result satisfies the
    constraint by construction.

    Accepts a single (d - n_c)-vector or a batch of rows.
    """
    free = np.asarray(free_coords, dtype=np.float64)
    if free.shape[-1] != dec.n_free:
        raise DimensionMismatch(
            f"free part has {free.shape[-1]} coordinates, expected {dec.n_free}"
        )
    if not np.all(np.isfinite(free)):
        raise InvalidArgument("free coordinates must be finite")
    base = dec.v_fixed @ dec.fixed_coords
    return base + free @ dec.v_free.T


def split(dec: ConstraintDecomposition, x) -> tuple[np.ndarray, np.ndarray]:
    """Project vectors onto the (fixed, free) rotated blocks.

    Accepts a single d-vector or a batch of rows; returns the pinned-block
    and free-block coordinates.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != dec.dim:
        raise DimensionMismatch(
            f"vector has {x.shape[-1]} coordinates, expected {dec.dim}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("input vectors must be finite")
    return x @ dec.v_fixed, x @ dec.v_free


def load_constraint(path) -> LinearConstraint:
    """Read a constraint from a JSON file ``{"A": [[...]], "b": [...]}``."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        return LinearConstraint(np.asarray(payload["A"]), np.asarray(payload["b"]))
    except KeyError as exc:
        raise InvalidArgument(f"constraint file is missing key {exc}") from exc


def save_constraint(constraint: LinearConstraint, path) -> None:
    """Write a constraint as JSON with keys "A" and "b"."""
    payload = {"A": constraint.a.tolist(), "b": constraint.b.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
