"""Semigroups of random finite-dimensional projections driven by Poisson clocks."""

from .estimator import PoissonClockProjection
from .intensity import IntensityModel, check_condition2, parse_intensity, truncation_index
from .mc import ExperimentSpec, MCEstimate, compare_to_law, derive_path_stream, run_experiment
from .semigroup import (
    ClockFieldSample,
    ProjectionRealization,
    apply,
    compose,
    dim_alpha,
    realize,
    sample_clock_field,
    sample_first_kill_times,
)
from .widths import CompactSpec

__version__ = "0.1.0"

__all__ = [
    "PoissonClockProjection",
    "IntensityModel",
    "check_condition2",
    "parse_intensity",
    "truncation_index",
    "ExperimentSpec",
    "MCEstimate",
    "compare_to_law",
    "derive_path_stream",
    "run_experiment",
    "ClockFieldSample",
    "ProjectionRealization",
    "apply",
    "compose",
    "dim_alpha",
    "realize",
    "sample_clock_field",
    "sample_first_kill_times",
    "CompactSpec",
]
