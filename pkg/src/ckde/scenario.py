"""Trajectory ingestion, fixed-length speed-profile windowing, synthetic
corpus generation, and the CSV formats shared by the CLI.

The synthetic generator stands in for recorded traffic data: piecewise
constant accelerations produce continuous, physically plausible speed
traces that can be windowed into profile vectors.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidArgument, RefusedNonFinite, TooShort


@dataclass(frozen=True)
class SpeedProfile:
    """A fixed-length speed trace: samples every ``dt`` seconds from ``t0``."""

    t0: float
    dt: float
    speeds: np.ndarray

    def __post_init__(self):
        speeds = np.asarray(self.speeds, dtype=np.float64)
        if self.dt <= 0.0:
            raise InvalidArgument("dt must be positive")
        if speeds.ndim != 1 or speeds.size < 2:
            raise InvalidArgument("a profile needs at least two speed samples")
        if not np.all(np.isfinite(speeds)) or np.any(speeds < 0.0):
            raise InvalidArgument("speeds must be finite and non-negative")
        speeds = speeds.copy()
        speeds.flags.writeable = False
        object.__setattr__(self, "speeds", speeds)


def window_profiles(times, speeds, dt: float, n_t: int, stride: int | None = None):
    """Cut a time-ordered speed series into profiles of n_t+1 samples.

    The series is resampled to spacing ``dt`` by linear interpolation when
    its own sampling differs. Windows advance by ``stride`` samples
    (default n_t, i.e. non-overlapping).

    :raises TooShort: the series spans less than ``n_t * dt`` seconds.
    """
    t = np.asarray(times, dtype=np.float64).ravel()
    v = np.asarray(speeds, dtype=np.float64).ravel()
    if t.size != v.size:
        raise InvalidArgument("times and speeds must have equal length")
    if t.size < 2:
        raise TooShort("series has fewer than two samples")
    if np.any(np.diff(t) <= 0.0):
        raise InvalidArgument("times must be strictly increasing")
    if dt <= 0.0 or n_t < 1:
        raise InvalidArgument("dt must be positive and n_t at least 1")
    if stride is None:
        stride = n_t
    if stride < 1:
        raise InvalidArgument("stride must be at least 1")
    span = t[-1] - t[0]
    if span < n_t * dt - 1e-9:
        raise TooShort(f"series spans {span:.3f}s, need {n_t * dt:.3f}s")

    native = np.diff(t)
    if np.allclose(native, dt, rtol=0.0, atol=1e-9):
        grid_v = v
    else:
        n_grid = int(np.floor(span / dt + 1e-9)) + 1
        grid_t = t[0] + dt * np.arange(n_grid)
        grid_v = np.interp(grid_t, t, v)

    width = n_t + 1
    profiles = []
    for start in range(0, grid_v.size - width + 1, stride):
        profiles.append(
            SpeedProfile(
                t0=float(t[0] + start * dt),
                dt=dt,
                speeds=grid_v[start : start + width],
            )
        )
    return profiles


def profiles_matrix(profiles) -> np.ndarray:
    """Stack profiles into an N-by-(n_t+1) matrix of parameter vectors."""
    if not profiles:
        raise EmptyInput("no profiles to stack")
    return np.vstack([p.speeds for p in profiles])


@dataclass(frozen=True)
class SynthParams:
    """Knobs of the synthetic trajectory generator."""

    speed_range: tuple[float, float] = (0.0, 40.0)
    accel_range: tuple[float, float] = (-3.0, 2.0)
    mean_segment_duration: float = 4.0

    def __post_init__(self):
        lo, hi = self.speed_range
        alo, ahi = self.accel_range
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi or lo < 0.0:
            raise InvalidArgument("speed range must be finite with 0 <= lo <= hi")
        if not (np.isfinite(alo) and np.isfinite(ahi)) or alo > ahi:
            raise InvalidArgument("acceleration range must be finite with lo <= hi")
        if self.mean_segment_duration <= 0.0:
            raise InvalidArgument("mean segment duration must be positive")


def synthesize_trajectories(
    rng: np.random.Generator,
    n_vehicles: int,
    duration: float,
    dt: float,
    params: SynthParams | None = None,
):
    """Generate speed traces with piecewise-constant random acceleration.

    Each vehicle starts at a uniform random speed; acceleration is redrawn
    after exponentially distributed segment durations and the speed is
    clipped to the allowed range. Returns a list of (times, speeds) pairs.
    """
    if params is None:
        params = SynthParams()
    if n_vehicles < 1:
        raise InvalidArgument("need at least one vehicle")
    if duration <= 0.0 or dt <= 0.0:
        raise InvalidArgument("duration and dt must be positive")
    lo, hi = params.speed_range
    alo, ahi = params.accel_range
    n_samples = int(np.floor(duration / dt + 1e-9)) + 1
    times = dt * np.arange(n_samples)
    out = []
    for _ in range(n_vehicles):
        speeds = np.empty(n_samples)
        speeds[0] = rng.uniform(lo, hi) if hi > lo else lo
        accel = rng.uniform(alo, ahi)
        next_switch = rng.exponential(params.mean_segment_duration)
        for i in range(1, n_samples):
            if times[i] >= next_switch:
                accel = rng.uniform(alo, ahi)
                next_switch += rng.exponential(params.mean_segment_duration)
            speeds[i] = min(max(speeds[i - 1] + accel * dt, lo), hi)
        out.append((times.copy(), speeds))
    return out


def write_trajectories(trajectories, path) -> None:
    """Write (times, speeds) pairs as CSV columns vehicle_id, t, speed."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "t", "speed"])
        for vid, (times, speeds) in enumerate(trajectories):
            for t, v in zip(times, speeds):
                writer.writerow([vid, repr(float(t)), repr(float(v))])


def read_trajectories(path):
    """Read a vehicle_id,t,speed CSV into a list of (times, speeds) pairs."""
    by_vehicle: dict[str, list[tuple[float, float]]] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"vehicle_id", "t", "speed"} <= set(
            reader.fieldnames
        ):
            raise InvalidArgument(
                "trajectory CSV needs columns vehicle_id, t, speed"
            )
        for row in reader:
            vid = row["vehicle_id"]
            if vid not in by_vehicle:
                by_vehicle[vid] = []
                order.append(vid)
            by_vehicle[vid].append((float(row["t"]), float(row["speed"])))
    out = []
    for vid in order:
        rows = by_vehicle[vid]
        times = np.array([r[0] for r in rows])
        speeds = np.array([r[1] for r in rows])
        out.append((times, speeds))
    return out


def export_samples(samples, path) -> None:
    """Write an m-by-D matrix as CSV with header p1..pD.

    Values are printed with shortest round-trip formatting, so reading the
    file back reproduces the matrix bit-exactly.

    :raises RefusedNonFinite: if any entry is NaN or infinite.
    """
    mat = np.asarray(samples, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat.reshape(0, 0) if mat.size == 0 else mat[np.newaxis, :]
    if mat.size and not np.all(np.isfinite(mat)):
        raise RefusedNonFinite("matrix contains NaN or infinite entries")
    n_cols = mat.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"p{k + 1}" for k in range(n_cols)])
        for row in mat:
            writer.writerow([repr(float(x)) for x in row])


def read_samples(path) -> np.ndarray:
    """Read a samples CSV (header row, one point per row) back to a matrix."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InvalidArgument("samples CSV is empty")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise InvalidArgument(f"{path}:{lineno}: {exc}") from exc
            if len(rows[-1]) != len(header):
                raise InvalidArgument(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(rows[-1])}"
                )
    if not rows:
        return np.empty((0, len(header)))
    return np.asarray(rows, dtype=np.float64)
