"""Copula state space models: simulation, posterior sampling, prediction and CRPS scoring."""

from ._core import (
    CompletenessError,
    ConfigError,
    DomainError,
    FitError,
    NumericError,
    PosteriorDraws,
    RangeError,
    boxcox,
    crps,
    density,
    fit,
    hfunc,
    hinv,
    inv_boxcox,
    kalman_loglik,
    log_posterior,
    predict_insample,
    predict_oos,
    run,
    simulate,
    tau_to_theta,
)

__all__ = [
    "CompletenessError",
    "ConfigError",
    "DomainError",
    "FitError",
    "NumericError",
    "PosteriorDraws",
    "RangeError",
    "boxcox",
    "crps",
    "density",
    "fit",
    "hfunc",
    "hinv",
    "inv_boxcox",
    "kalman_loglik",
    "log_posterior",
    "predict_insample",
    "predict_oos",
    "run",
    "simulate",
    "tau_to_theta",
]
