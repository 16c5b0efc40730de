"""Gaussian KDE with exact linear-equality-constrained sampling.

The package fits a Gaussian kernel density estimate to multivariate data
and draws random samples that satisfy ``A x = b`` exactly, using an SVD
rotation of the constraint, Schur-complement conditioning of the kernel
precision, and alias-table categorical sampling. A truncated-SVD reduction
maps long scenario parameter vectors (speed profiles) to a few
coefficients, with endpoint constraints expressed in the reduced space.
"""

from ._kernels import ACTIVE_BACKEND
from .constraint import (
    ConstraintDecomposition,
    LinearConstraint,
    decompose,
    embed,
    load_constraint,
    save_constraint,
    split,
)
from .errors import (
    AcceptanceTooLow,
    CkdeError,
    DegenerateData,
    DimensionMismatch,
    EmptyInput,
    InconsistentConstraint,
    InvalidArgument,
    NumericalBreakdown,
    OverConstrained,
    RefusedNonFinite,
    TooFewPoints,
    TooShort,
    UnsupportedDimension,
)
from .kde import (
    BandwidthMatrix,
    DataSet,
    GaussianKde,
    loo_cv_bandwidth,
    loo_cv_scores,
    silverman_bandwidth,
)
from .model import FittedModel, load_model, parse_bandwidth_spec, save_model
from .oracle import (
    GridDensity,
    conditional_density_line,
    free_coordinates,
    histogram_distance,
    rejection_sample,
)
from .reduction import (
    KIND_INIT_END_SPEED,
    KIND_INIT_SPEED_ACCEL,
    ReducedBasis,
    decode,
    encode,
    endpoint_constraint,
    fit_reduced_basis,
)
from .sampler import (
    RotatedPrecision,
    SamplerDiagnostics,
    SamplerState,
    diagnostics,
    draw,
    draw_many,
    prepare,
)
from .scenario import (
    SpeedProfile,
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

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "AcceptanceTooLow",
    "BandwidthMatrix",
    "CkdeError",
    "ConstraintDecomposition",
    "DEFAULT_SEED",
    "DataSet",
    "DegenerateData",
    "DimensionMismatch",
    "EmptyInput",
    "FittedModel",
    "GaussianKde",
    "GridDensity",
    "InconsistentConstraint",
    "InvalidArgument",
    "KIND_INIT_END_SPEED",
    "KIND_INIT_SPEED_ACCEL",
    "LinearConstraint",
    "NumericalBreakdown",
    "OverConstrained",
    "ReducedBasis",
    "RefusedNonFinite",
    "RotatedPrecision",
    "SamplerDiagnostics",
    "SamplerState",
    "SpeedProfile",
    "SynthParams",
    "TooFewPoints",
    "TooShort",
    "UnsupportedDimension",
    "conditional_density_line",
    "decode",
    "decompose",
    "diagnostics",
    "draw",
    "draw_many",
    "embed",
    "encode",
    "endpoint_constraint",
    "export_samples",
    "fit_reduced_basis",
    "free_coordinates",
    "histogram_distance",
    "load_constraint",
    "load_model",
    "loo_cv_bandwidth",
    "loo_cv_scores",
    "parse_bandwidth_spec",
    "prepare",
    "profiles_matrix",
    "read_samples",
    "read_trajectories",
    "rejection_sample",
    "save_constraint",
    "save_model",
    "silverman_bandwidth",
    "split",
    "substream",
    "synthesize_trajectories",
    "window_profiles",
    "write_trajectories",
]
