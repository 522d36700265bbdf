import numpy as np
import pytest

from confounding_attribution.exceptions import WidthMismatch
from confounding_attribution.regression import (
    REGRESSION_BACKENDS,
    ExactCellMean,
    KnnRegressor,
    MeanRegressor,
    backend_factory,
    fit,
    predict,
)


@pytest.mark.parametrize("kind", sorted(REGRESSION_BACKENDS))
def test_backend_factory_builds_every_backend(kind):
    assert backend_factory(kind) is not None


def test_backend_factory_forwards_params():
    backend = backend_factory("knn", k=3)
    assert isinstance(backend, KnnRegressor) and backend.k == 3


def test_backend_factory_raise_error_with_unknown_kind():
    with pytest.raises(ValueError):
        backend_factory("xgboost")


def test_fit_does_not_mutate_backend():
    backend = ExactCellMean()
    fit(backend, np.array([[0.0], [1.0]]), np.array([1.0, 2.0]))
    assert not hasattr(backend, "cell_means_")


def test_fit_zero_width_uses_training_mean():
    model = fit(KnnRegressor(), np.empty((4, 0)), np.array([1.0, 2.0, 3.0, 6.0]))
    assert isinstance(model.estimator, MeanRegressor)
    assert predict(model, np.empty((2, 0))).tolist() == [3.0, 3.0]


def test_predict_accepts_one_dimensional_input():
    model = fit(ExactCellMean(), np.array([0.0, 1.0, 1.0]), np.array([0.0, 2.0, 4.0]))
    assert model.width == 1
    assert predict(model, np.array([1.0, 0.0])).tolist() == [3.0, 0.0]


def test_predict_raise_error_on_width_mismatch():
    model = fit(ExactCellMean(), np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, 1.0]))
    with pytest.raises(WidthMismatch):
        predict(model, np.zeros((1, 1)))
