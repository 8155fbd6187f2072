"""Gaussian excursion-set laboratory.

Samples smooth stationary Gaussian fields by white-noise convolution,
extracts the finitary unbounded excursion component on a lattice, and
measures its volume, boundary length and Euler characteristic, together
with the Monte Carlo experiments that probe the limiting constants,
variance scaling, resampling moment decay and truncated-connection decay.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ResourceError, UnsupportedEvaluationError
from .kernels import KernelSpec, beta_thresholds, covariance_K, evaluate_q, make_kernel
from .field import FieldSample, NoiseLattice, perturbation, resample_cube, sample_field
from .geometry import (
    LabeledExcursion,
    arm_event,
    connection_event,
    euler_characteristic,
    label_excursion,
    mu_ec,
    mu_sa,
    mu_vol,
)
from .harness import RunRecord, derive_seed, run_experiment

__all__ = [
    "ConfigError",
    "ResourceError",
    "UnsupportedEvaluationError",
    "KernelSpec",
    "make_kernel",
    "evaluate_q",
    "covariance_K",
    "beta_thresholds",
    "NoiseLattice",
    "FieldSample",
    "sample_field",
    "resample_cube",
    "perturbation",
    "LabeledExcursion",
    "label_excursion",
    "mu_vol",
    "mu_sa",
    "mu_ec",
    "arm_event",
    "connection_event",
    "euler_characteristic",
    "RunRecord",
    "derive_seed",
    "run_experiment",
    "__version__",
]
