"""Recursive copula predictive density estimation (R-BP / AR-BP family)."""

from . import (
    bandwidth,
    baseline,
    bench,
    data,
    engine,
    mathcore,
    modelio,
    sampling,
    supervised,
    train,
)
from .bandwidth import ArNetWeights, Constant, Net, PerDim, RationalQuadratic, Rbf, make_model
from .engine import FittedDensityModel, eval_log_density, fit
from .mathcore import NumericFault
from .modelio import load_model, save_model
from .supervised import SupervisedModel, fit_classification, fit_regression
from .train import OptimizerConfig, optimize

__all__ = [
    "ArNetWeights",
    "Constant",
    "FittedDensityModel",
    "Net",
    "NumericFault",
    "OptimizerConfig",
    "PerDim",
    "RationalQuadratic",
    "Rbf",
    "SupervisedModel",
    "bandwidth",
    "baseline",
    "bench",
    "data",
    "engine",
    "eval_log_density",
    "fit",
    "fit_classification",
    "fit_regression",
    "load_model",
    "make_model",
    "mathcore",
    "modelio",
    "optimize",
    "sampling",
    "save_model",
    "supervised",
    "train",
]
