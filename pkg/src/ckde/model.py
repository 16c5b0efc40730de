"""Fitted-model persistence so fitting and sampling can run as separate
processes.

A model file is a single JSON document holding the path of the KDE's data
points (reduced coefficients when a basis is attached), the standardization
statistics, the bandwidth matrix, and the optional reduction basis with its
profile sampling interval.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .kde import BandwidthMatrix, DataSet, GaussianKde, loo_cv_bandwidth, silverman_bandwidth
from .reduction import ReducedBasis
from .scenario import export_samples, read_samples

MODEL_FORMAT = "ckde-model-v1"


@dataclass(frozen=True)
class FittedModel:
    """A ready-to-sample KDE plus the optional profile-reduction basis."""

    kde: GaussianKde
    basis: ReducedBasis | None = None
    profile_dt: float | None = None


def parse_bandwidth_spec(spec: str, data: DataSet) -> BandwidthMatrix:
    """Resolve a CLI bandwidth spec against a data set.

    Accepted forms: ``silverman``, ``cv:<lo>:<hi>:<count>`` (geometric
    candidate grid for leave-one-out cross validation), and
    ``file:<path>`` pointing at JSON ``{"H": [[...]]}``.
    """
    if spec == "silverman":
        return silverman_bandwidth(data)
    if spec.startswith("cv:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise InvalidArgument("cross-validation spec must be cv:<lo>:<hi>:<count>")
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        if not (0.0 < lo <= hi) or count < 1:
            raise InvalidArgument("cross-validation grid bounds must satisfy 0 < lo <= hi")
        grid = np.geomspace(lo, hi, count)
        return loo_cv_bandwidth(data, grid)
    if spec.startswith("file:"):
        with open(spec[5:], "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return BandwidthMatrix(np.asarray(payload["H"], dtype=np.float64))
    raise InvalidArgument(f"unknown bandwidth spec {spec!r}")


def save_model(model: FittedModel, path: str) -> None:
    """Write the model JSON and its points CSV next to each other."""
    path = os.fspath(path)
    points_path = os.path.splitext(path)[0] + ".points.csv"
    data = model.kde.data
    export_samples(data.destandardize(data.points), points_path)
    payload = {
        "format": MODEL_FORMAT,
        "points_path": os.path.basename(points_path),
        "standardize": {
            "mean": data.mean.tolist(),
            "std": data.std.tolist(),
            "standardized": data.standardized,
        },
        "bandwidth": {"H": model.kde.bandwidth.matrix.tolist()},
        "reduction": None,
    }
    if model.basis is not None:
        payload["reduction"] = {
            "mu": model.basis.mean.tolist(),
            "UB1": model.basis.modes.tolist(),
            "SB1": model.basis.scales.tolist(),
            "d_red": model.basis.n_components,
            "dt": model.profile_dt,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path: str) -> FittedModel:
    """Load a model JSON written by :func:`save_model`."""
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise InvalidArgument(f"not a {MODEL_FORMAT} file: {path}")
    points_path = os.path.join(os.path.dirname(path), payload["points_path"])
    raw_points = read_samples(points_path)
    data = DataSet.from_points(raw_points)
    std_info = payload["standardize"]
    if std_info["standardized"]:
        mean = np.asarray(std_info["mean"], dtype=np.float64)
        std = np.asarray(std_info["std"], dtype=np.float64)
        points = (raw_points - mean) / std
        for arr in (points, mean, std):
            arr.flags.writeable = False
        data = DataSet(points=points, mean=mean, std=std, standardized=True)
    kde = GaussianKde(data, BandwidthMatrix(np.asarray(payload["bandwidth"]["H"])))
    basis = None
    profile_dt = None
    if payload.get("reduction"):
        red = payload["reduction"]
        basis = ReducedBasis(
            mean=np.asarray(red["mu"], dtype=np.float64),
            modes=np.asarray(red["UB1"], dtype=np.float64),
            scales=np.asarray(red["SB1"], dtype=np.float64),
        )
        if basis.n_components != int(red["d_red"]):
            raise InvalidArgument("model reduction block is inconsistent")
        profile_dt = red.get("dt")
    return FittedModel(kde=kde, basis=basis, profile_dt=profile_dt)
