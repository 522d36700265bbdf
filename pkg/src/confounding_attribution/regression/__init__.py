from .backends import (
    AutoRegressor,
    ExactCellMean,
    KnnRegressor,
    MeanRegressor,
    PiecewiseConstantTree,
)
from .fitted import REGRESSION_BACKENDS, FittedModel, backend_factory, fit, predict
