from dataclasses import dataclass
from typing import Dict, Literal, Optional, Type

import numpy as np
from sklearn.base import BaseEstimator, clone

from confounding_attribution.data import CoalitionMask
from confounding_attribution.exceptions import WidthMismatch
from confounding_attribution.regression.backends import (
    AutoRegressor,
    ExactCellMean,
    KnnRegressor,
    MeanRegressor,
    PiecewiseConstantTree,
)

BackendKind = Literal["auto", "exact_cell_mean", "knn", "tree"]
REGRESSION_BACKENDS = {"auto", "exact_cell_mean", "knn", "tree"}


def backend_factory(kind: BackendKind, **params) -> BaseEstimator:
    """Return an unfitted regression backend.

    Args:
        kind: Backend name
        **params: Backend hyperparameters (e.g. ``k`` for ``"knn"``)

    Raises:
        ValueError: If `kind` does not exist in REGRESSION_BACKENDS
    """
    if kind not in REGRESSION_BACKENDS:
        raise ValueError(f'"{kind}" is not a valid regression backend.')

    mapping: Dict[BackendKind, Type[BaseEstimator]] = {
        "auto": AutoRegressor,
        "exact_cell_mean": ExactCellMean,
        "knn": KnnRegressor,
        "tree": PiecewiseConstantTree,
    }
    return mapping[kind](**params)


@dataclass(frozen=True)
class FittedModel:
    """A trained backend together with the columns it was trained on."""

    estimator: BaseEstimator
    width: int
    mask: Optional[CoalitionMask] = None


def fit(
    backend: BaseEstimator, x: np.ndarray, y: np.ndarray, mask: Optional[CoalitionMask] = None
) -> FittedModel:
    """Fit a fresh clone of ``backend`` on ``(x, y)``.

    A zero-width design always yields the training-mean predictor,
    whatever the backend.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    estimator = MeanRegressor() if x.shape[1] == 0 else clone(backend)
    estimator.fit(x, y)
    return FittedModel(estimator=estimator, width=x.shape[1], mask=mask)


def predict(model: FittedModel, x_eval: np.ndarray) -> np.ndarray:
    x_eval = np.asarray(x_eval, dtype=np.float64)
    if x_eval.ndim == 1:
        x_eval = x_eval.reshape(-1, 1)
    if x_eval.shape[1] != model.width:
        raise WidthMismatch(
            f"Model was trained on {model.width} column(s) but got {x_eval.shape[1]}."
        )
    return np.asarray(model.estimator.predict(x_eval), dtype=np.float64)
