"""MixCobra: combine estimators by kernel weights over inputs and machine predictions."""

from .combine import (
    CLASSIFICATION,
    REGRESSION,
    CobraParams,
    Dataset,
    DimensionError,
    MachinePredictions,
    MixCobraParams,
    WeightVector,
    cobra_predict_class,
    cobra_predict_regression,
    cobra_weights,
    mixcobra_predict_class,
    mixcobra_predict_regression,
    mixcobra_weights,
    predict_many,
)
from .experiment import ErrorTable, ExperimentConfig, run_dimension_sweep, run_experiment
from .kernel import Kernel, make_kernel
from .tuning import ParamGrid, TuningResult, cross_validate_cobra, cross_validate_mixcobra

__version__ = "0.1.0"
