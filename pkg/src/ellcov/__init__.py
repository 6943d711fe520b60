"""Conditional covariance and correlation matrices of elliptical random vectors
conditioned on quantile sets of a linear benchmark ``Y = a X``."""

from .conditional import (
    ConditionalReport,
    conditional_covariance,
    conditional_covariance_mc,
    regression_beta,
    scaled_relation_check,
)
from .diagnostics import (
    ConditionalCovarianceDiagnostic,
    DataMatrix,
    DiagnosticReport,
    bootstrap_reference,
    check_normality,
    empirical_conditional_covariances,
    equality_statistic,
    read_csv,
)
from .elliptical import Benchmark, EllipticalModel, SampleMatrix, benchmark, sample, validate_model
from .families import CustomGenerator, Gaussian, GeneratorFamily, StudentT
from .invariants import (
    InvariantValue,
    ProbabilitySubset,
    k_invariant,
    k_invariant_mc,
    k_via_radial,
    tail_density,
    tail_probability,
    truncated_moments,
)
from .partition import (
    PartitionResult,
    equal_kprime_partition,
    equal_variance_partition,
    verify_partition,
)

__version__ = "0.1.0"
