"""Heterogeneous tensor mixtures with sparse CP means and sparse separable precisions."""
from .errors import (
    ArgumentError,
    ConvergenceError,
    DeadFactorError,
    DegenerateWarning,
    DegeneracyError,
    FormatError,
    IngestionError,
    NumericalRankError,
    SelectionError,
    TenmixError,
)
from .hecm import FitResult, HecmConfig, e_step, fit, initialize, mixture_loglik
from .model_select import ebic, select_k, tune
from .params import CpMean, ModelParams, PrecisionSet
from .simulation import SimDesign, generate
from .tensor_normal import TnParams, log_density, sample

__version__ = "0.1.0"
