"""divisim: parametric divisibility of loss distributions.

Exact piece extraction for divisible families, Gamma / Gamma-convolution
approximation of distributions that are not parametrically divisible, and
Monte Carlo sampling of additive risk factor dependence models.
"""

from .diagnostics import (
    KdeCurve,
    QqTable,
    kde,
    kendall_tau,
    ks_statistic,
    pseudo_observations,
    qq_against_analytic,
)
from .distributions import (
    CompoundPoisson,
    DegenerateZero,
    Distribution,
    Gamma,
    GammaConvolution,
    Gaussian,
    LogNormal,
    NegativeBinomial,
    Pareto,
    Poisson,
    from_record,
)
from .divisibility import is_parametrically_divisible, partition, piece
from .fitting import (
    FitReport,
    LaplaceGrid,
    ShiftedMoments,
    default_laplace_grid,
    empirical_log_laplace,
    estimate_shifted_moments,
    fit_gamma_convolution,
    fit_gamma_mle,
    fit_gamma_shifted_moments,
    gamma_log_likelihood,
    read_sample_csv,
)
from .presets import PRESET_NAMES, preset_model
from .riskfactor import (
    BetaMatrix,
    RiskFactorModel,
    SampleMatrix,
    aggregate,
    build_model,
    derived_rng,
    load_model,
    model_from_record,
    model_to_record,
    reinject_marginals,
    sample_model,
)

__version__ = "0.1.0"
