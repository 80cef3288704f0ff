"""Empirical privacy auditing: Epsilon* lower bounds from loss samples."""
__version__ = "0.1.0"

from ._backend import NAME as BACKEND
from .config import AuditConfig, auto_delta
from .distfit import (EmpiricalDistribution, GammaParams, GmmParams, NormalParams, fit_gmm_1d,
                      fit_normal, sample_gamma)
from .epsilon_core import (EpsilonStarResult, RateCurve, epsilon_star_audit, epsilon_star_discrete,
                           epsilon_star_ecdf, epsilon_star_parametric, rate_curve_from_distributions)
from .errors import (DomainError, EpsStarError, InputError, NumericalError)
from .goodness_of_fit import FitQualityReport, KsResult, gmm_fit_quality, ks_two_sample
from .landscape import Frontier, StrategyPoint, emit_landscape, kde_marginal, pareto_frontier
from .loss_model import (LossSet, PredictionRecord, binary_loss, losses_from_predictions,
                         multiclass_loss, transform_losses)
from .mechanism_audit import EnsembleRates, epsilon_bar, jensen_check
from .simulation import SimConfig, SimResult, run_identity_experiment, run_shift_experiment

__all__ = [
    "AuditConfig", "BACKEND", "DomainError", "EmpiricalDistribution", "EnsembleRates",
    "EpsStarError", "EpsilonStarResult", "FitQualityReport", "Frontier", "GammaParams",
    "GmmParams", "InputError", "KsResult", "LossSet", "NormalParams", "NumericalError",
    "PredictionRecord", "RateCurve", "SimConfig", "SimResult", "StrategyPoint", "auto_delta",
    "binary_loss", "emit_landscape", "epsilon_bar", "epsilon_star_audit", "epsilon_star_discrete",
    "epsilon_star_ecdf", "epsilon_star_parametric", "fit_gmm_1d", "fit_normal", "gmm_fit_quality",
    "jensen_check", "kde_marginal", "ks_two_sample", "losses_from_predictions", "multiclass_loss",
    "pareto_frontier", "rate_curve_from_distributions", "run_identity_experiment",
    "run_shift_experiment", "sample_gamma", "transform_losses",
]
