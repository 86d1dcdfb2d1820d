"""Bayesian optimization over point clouds with graph Gaussian processes."""

from .acquisition import RunRecord, UcbConfig, beta, random_search_baseline, run_ucb, select_next
from .benchmarks import (
    HeatProblem,
    attainable_discrepancy,
    circle_benchmark,
    euclidean_kernel_model,
    heat_objective,
    heat_objective_all,
    make_heat_problem,
    noise_sd_rule,
    sampled_truth,
)
from .errors import (
    ConnectivityError,
    DegenerateInputError,
    EstimationError,
    ExhaustionError,
    GGPError,
    NumericalError,
    PointCloudParseError,
)
from .ggp import KernelSpec, SpectralCovariance, circle_oracle, graph_gp, sample_prior, sphere_eigenpairs
from .graph import (
    EMPIRICAL_L2,
    EUCLIDEAN_UNIT,
    GraphSpectrum,
    build_weight_matrix,
    detect_saturation,
    graph_spectrum,
    laplacian,
    spectrum,
    suggest_connectivity,
)
from .harness import ExperimentConfig, recovery_error, run_experiment, simple_regret
from .mle import MleProblem, MleRefit, estimate, negative_log_likelihood, nll_profile
from .point_cloud import (
    PointCloud,
    bundled_manifold,
    load_point_cloud,
    sample_circle,
    sample_peanut_tube,
    sample_sphere,
    subsample,
)
from .posterior import PosteriorState, condition

__version__ = "0.1.0"
