"""Kernel density estimation from partially rank-ordered set (PROS) samples."""

from .analysis import (
    RrvCurve,
    collision_edgeworth,
    collision_probability,
    delta_f_n,
    rrv_curve,
    rrv_vs_rss,
    rrv_vs_srs,
)
from .design import Design, MisplacementMatrix, RssErrorMatrix
from .distributions import (
    Distribution,
    mixture_identity_residual,
    order_stat_pdf,
    parse_distribution,
    subset_pdf,
)
from .em import EmConfig, EmTrace, empirical_cdf_pros, estimate_alpha, m_step, posterior_weights
from .kde import (
    EPANECHNIKOV,
    GAUSSIAN,
    BandwidthSpec,
    DensityEstimate,
    Kernel,
    bandwidth_silverman,
    get_kernel,
    kde_pooled,
    kde_pros,
    moment_estimator,
    pointwise_ci,
    pros_variance_estimate,
)
from .sampling import (
    FinitePopulation,
    ProsSample,
    draw_pros,
    draw_pros_finite,
    draw_rss,
    draw_srs,
    synthesize_population,
)
from .simulation import (
    AlphaRecoveryReport,
    MiseProtocol,
    SimulationReport,
    SymmetryReport,
    ise,
    run_alpha_recovery,
    run_mise_study,
    run_symmetry_study,
)
from .symmetric import LocationEstimator, estimate_location, kde_pros_symmetric

__version__ = "0.1.0"

__all__ = [
    "AlphaRecoveryReport",
    "BandwidthSpec",
    "Design",
    "DensityEstimate",
    "Distribution",
    "EmConfig",
    "EmTrace",
    "EPANECHNIKOV",
    "FinitePopulation",
    "GAUSSIAN",
    "Kernel",
    "LocationEstimator",
    "MiseProtocol",
    "MisplacementMatrix",
    "ProsSample",
    "RrvCurve",
    "RssErrorMatrix",
    "SimulationReport",
    "SymmetryReport",
    "bandwidth_silverman",
    "collision_edgeworth",
    "collision_probability",
    "delta_f_n",
    "draw_pros",
    "draw_pros_finite",
    "draw_rss",
    "draw_srs",
    "empirical_cdf_pros",
    "estimate_alpha",
    "estimate_location",
    "get_kernel",
    "ise",
    "kde_pooled",
    "kde_pros",
    "kde_pros_symmetric",
    "m_step",
    "mixture_identity_residual",
    "moment_estimator",
    "order_stat_pdf",
    "parse_distribution",
    "pointwise_ci",
    "posterior_weights",
    "pros_variance_estimate",
    "rrv_curve",
    "rrv_vs_rss",
    "rrv_vs_srs",
    "run_alpha_recovery",
    "run_mise_study",
    "run_symmetry_study",
    "subset_pdf",
    "synthesize_population",
]
