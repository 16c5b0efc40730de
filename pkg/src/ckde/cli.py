"""Command-line front end: corpus synthesis, model fitting, constrained
sampling, and validation, all reproducible from a single seed.

Exit codes: 0 success, 1 validation failure, 2 usage errors.
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import model as model_io
from .constraint import LinearConstraint, load_constraint
from .errors import CkdeError, InvalidArgument
from .kde import DataSet, GaussianKde
from .oracle import conditional_density_line, free_coordinates, histogram_distance
from .reduction import (
    KIND_INIT_END_SPEED,
    KIND_INIT_SPEED_ACCEL,
    decode,
    encode,
    endpoint_constraint,
    fit_reduced_basis,
)
from .sampler import diagnostics, draw_many, prepare
from .scenario import (
    SynthParams,
    export_samples,
    profiles_matrix,
    read_samples,
    read_trajectories,
    synthesize_trajectories,
    window_profiles,
    write_trajectories,
)
from .seeds import DEFAULT_SEED, substream

RESIDUAL_RTOL = 1e-8


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("CKDE_SEED")
    if env is not None:
        return int(env)
    return DEFAULT_SEED


def _atomic(path: str, write_fn) -> None:
    """Write through a sibling temp file and rename into place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckde-", suffix=".tmp")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def parse_constraint_spec(spec: str) -> LinearConstraint:
    """Accept a JSON file path, a JSON object string, or the inline form
    ``[[...],[...]],[...]``."""
    if os.path.exists(spec):
        return load_constraint(spec)
    text = spec.strip()
    try:
        if text.startswith("{"):
            payload = json.loads(text)
            return LinearConstraint(np.asarray(payload["A"]), np.asarray(payload["b"]))
        pair = json.loads(f"[{text}]")
        if len(pair) != 2:
            raise ValueError("expected a matrix and a vector")
        return LinearConstraint(np.asarray(pair[0]), np.asarray(pair[1]))
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidArgument(
            f"cannot parse constraint {spec!r}: give a JSON file, "
            '\'{"A": [[...]], "b": [...]}\', or \'[[...]],[...]\''
        ) from exc


def _constraint_from_args(args, fitted) -> LinearConstraint:
    shorthand = args.init_speed is not None
    if shorthand:
        if fitted.basis is None:
            raise InvalidArgument("endpoint shorthands need a model fitted with --d-red")
        dt = fitted.profile_dt if fitted.profile_dt else args.dt
        if dt is None:
            raise InvalidArgument("model has no profile dt; pass --dt")
        if (args.init_accel is None) == (args.end_speed is None):
            raise InvalidArgument(
                "give exactly one of --init-accel or --end-speed with --init-speed"
            )
        if args.init_accel is not None:
            return endpoint_constraint(
                fitted.basis,
                KIND_INIT_SPEED_ACCEL,
                (args.init_speed, args.init_accel),
                dt,
            )
        return endpoint_constraint(
            fitted.basis,
            KIND_INIT_END_SPEED,
            (args.init_speed, args.end_speed),
            dt,
        )
    if args.constraint is None:
        raise InvalidArgument("give --constraint or the --init-speed shorthands")
    return parse_constraint_spec(args.constraint)


def _cmd_synth(args) -> int:
    rng = substream(_resolve_seed(args.seed), "corpus")
    params = SynthParams(
        speed_range=(args.speed_min, args.speed_max),
        accel_range=(args.accel_min, args.accel_max),
        mean_segment_duration=args.segment_mean,
    )
    trajectories = synthesize_trajectories(
        rng, args.n_vehicles, args.duration, args.dt, params
    )
    _atomic(args.output, lambda tmp: write_trajectories(trajectories, tmp))
    print(f"wrote {len(trajectories)} trajectories to {args.output}")
    return 0


def _cmd_fit(args) -> int:
    if args.trajectories:
        profiles = []
        for times, speeds in read_trajectories(args.input):
            profiles.extend(
                window_profiles(times, speeds, args.dt, args.n_t, args.stride)
            )
        raw = profiles_matrix(profiles)
    else:
        raw = read_samples(args.input)
    basis = None
    profile_dt = None
    if args.d_red is not None:
        basis, coords = fit_reduced_basis(raw, args.d_red)
        raw = coords
        profile_dt = args.dt if args.trajectories else args.profile_dt
    data = DataSet.from_points(raw).standardize()
    bandwidth = model_io.parse_bandwidth_spec(args.bandwidth, data)
    fitted = model_io.FittedModel(
        kde=GaussianKde(data, bandwidth), basis=basis, profile_dt=profile_dt
    )
    model_io.save_model(fitted, args.output)
    print(
        f"fitted KDE on {data.n} points in {data.dim} dimensions -> {args.output}"
    )
    return 0


def _cmd_sample(args) -> int:
    fitted = model_io.load_model(args.model)
    rng = substream(_resolve_seed(args.seed), "sampling")
    coords = fitted.kde.data.destandardize(fitted.kde.sample(rng, args.m))
    out = decode(fitted.basis, coords) if fitted.basis is not None else coords
    _atomic(args.output, lambda tmp: export_samples(out, tmp))
    print(f"wrote {args.m} samples to {args.output}")
    return 0


def _cmd_csample(args) -> int:
    fitted = model_io.load_model(args.model)
    constraint = _constraint_from_args(args, fitted)
    state = prepare(fitted.kde, constraint)
    rng = substream(_resolve_seed(args.seed), "sampling")
    coords = draw_many(state, rng, args.m)
    out = decode(fitted.basis, coords) if fitted.basis is not None else coords
    _atomic(args.output, lambda tmp: export_samples(out, tmp))
    report = diagnostics(state)
    print(
        json.dumps(
            {
                "written": args.output,
                "n_samples": args.m,
                "ess": report.ess,
                "max_log_weight": report.max_log_weight,
                "n_active_weights": report.n_active_weights,
                "low_ess": report.low_ess,
            }
        )
    )
    return 0


def _auto_grid(fitted, constraint, n_points: int) -> np.ndarray:
    state = prepare(fitted.kde, constraint)
    if state.n_free != 1:
        raise InvalidArgument("the grid oracle needs exactly one free dimension")
    sd = 1.0 / float(state.prec.chol_ff[0, 0])
    centers = state.translated_means[:, 0]
    lo = float(centers.min()) - 6.0 * sd
    hi = float(centers.max()) + 6.0 * sd
    return np.linspace(lo, hi, n_points)


def _cmd_oracle(args) -> int:
    fitted = model_io.load_model(args.model)
    constraint = _constraint_from_args(args, fitted)
    if args.grid_lo is not None and args.grid_hi is not None:
        grid = np.linspace(args.grid_lo, args.grid_hi, args.grid_n)
    else:
        grid = _auto_grid(fitted, constraint, args.grid_n)
    density = conditional_density_line(fitted.kde, constraint, grid)
    _atomic(args.output, lambda tmp: density.to_csv(tmp))
    print(f"wrote {args.grid_n}-point conditional density to {args.output}")
    return 0


def _cmd_validate(args) -> int:
    fitted = model_io.load_model(args.model)
    constraint = _constraint_from_args(args, fitted)
    samples = read_samples(args.samples)
    if samples.shape[0] == 0:
        raise InvalidArgument(f"no samples in {args.samples}")
    if fitted.basis is not None and samples.shape[1] == fitted.basis.full_dim:
        samples = encode(fitted.basis, samples)
    residual = np.abs(constraint.residual(samples)).max()
    tolerance = RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(constraint.b)))
    residual_ok = bool(residual <= tolerance)
    report = {
        "n_samples": int(samples.shape[0]),
        "max_residual": float(residual),
        "residual_tolerance": tolerance,
        "residual_ok": residual_ok,
        "tv": None,
        "tv_max": args.tv_max,
        "tv_ok": None,
    }
    state = prepare(fitted.kde, constraint)
    if state.n_free == 1:
        grid = _auto_grid(fitted, constraint, args.grid_n)
        density = conditional_density_line(fitted.kde, constraint, grid)
        coords = free_coordinates(fitted.kde, constraint, samples)
        tv = histogram_distance(coords, density, args.bins)
        report["tv"] = float(tv)
        report["tv_ok"] = bool(tv <= args.tv_max)
    report["ok"] = residual_ok and report["tv_ok"] is not False
    print(json.dumps(report))
    return 0 if report["ok"] else 1


def _add_constraint_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--constraint",
        help="JSON file, '{\"A\": ..., \"b\": ...}', or '[[...]],[...]'",
    )
    parser.add_argument("--init-speed", type=float, help="pin the first profile sample [m/s]")
    parser.add_argument(
        "--init-accel",
        type=float,
        help="pin the forward-difference acceleration of the first two samples [m/s^2]",
    )
    parser.add_argument("--end-speed", type=float, help="pin the last profile sample [m/s]")
    parser.add_argument(
        "--dt", type=float, default=None, help="profile sample spacing if the model lacks one"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ckde",
        description=(
            "Fit a Gaussian KDE and draw samples that satisfy a linear "
            "equality constraint exactly."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic trajectory corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n-vehicles", type=int, default=100)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--speed-min", type=float, default=0.0)
    p.add_argument("--speed-max", type=float, default=40.0)
    p.add_argument("--accel-min", type=float, default=-3.0)
    p.add_argument("--accel-max", type=float, default=2.0)
    p.add_argument("--segment-mean", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="fit bandwidth (and optional reduction), write model JSON")
    p.add_argument("input", help="points CSV, or trajectory CSV with --trajectories")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--trajectories", action="store_true", help="window the input into profiles")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--n-t", type=int, default=50)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument(
        "--bandwidth",
        default="silverman",
        help="silverman | cv:<lo>:<hi>:<count> | file:<H.json>",
    )
    p.add_argument("--d-red", type=int, default=None, help="reduced dimension (enables SVD reduction)")
    p.add_argument("--profile-dt", type=float, default=None, help="profile spacing for points input")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sample", help="draw unconstrained samples from a model")
    p.add_argument("model")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("csample", help="draw constraint-satisfying samples from a model")
    p.add_argument("model")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    _add_constraint_options(p)
    p.set_defaults(func=_cmd_csample)

    p = sub.add_parser("oracle", help="write the conditional density line as CSV")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--grid-lo", type=float, default=None)
    p.add_argument("--grid-hi", type=float, default=None)
    p.add_argument("--grid-n", type=int, default=512)
    _add_constraint_options(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("validate", help="check samples against the model and constraint")
    p.add_argument("model")
    p.add_argument("--samples", required=True)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--tv-max", type=float, default=0.02)
    p.add_argument("--grid-n", type=int, default=512)
    _add_constraint_options(p)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CkdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
