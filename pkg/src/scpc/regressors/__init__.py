"""Statistical learning primitives shared by admissibility and continuation fitting."""

from scpc.regressors.basis import PolynomialBasis, ols_fit
from scpc.regressors.gp import GPModel, gp_condition, gp_fit, gp_predict
from scpc.regressors.logistic import LogisticModel, logistic_fit
from scpc.regressors.piecewise import (
    GlobalPolySurface,
    PiecewiseContinuationSurface,
    piecewise_fit,
)
from scpc.regressors.quantile import QuantRegModel, pinball_loss, quantile_fit
from scpc.regressors.svm import SVMModel, svm_fit
from scpc.regressors.truncnorm import TruncNormalParams, truncnormal_mle, truncnormal_mle_batch

__all__ = [
    "PolynomialBasis",
    "ols_fit",
    "GPModel",
    "gp_condition",
    "gp_fit",
    "gp_predict",
    "LogisticModel",
    "logistic_fit",
    "QuantRegModel",
    "pinball_loss",
    "quantile_fit",
    "SVMModel",
    "svm_fit",
    "TruncNormalParams",
    "truncnormal_mle",
    "truncnormal_mle_batch",
    "PiecewiseContinuationSurface",
    "GlobalPolySurface",
    "piecewise_fit",
]
