import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confounding_attribution.exceptions import (
    CellCardinalityExceeded,
    EmptyTrainingSet,
    WidthMismatch,
)
from confounding_attribution.regression import (
    AutoRegressor,
    ExactCellMean,
    KnnRegressor,
    MeanRegressor,
    PiecewiseConstantTree,
)


@pytest.fixture(scope="module")
def continuous_xy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 3))
    y = x[:, 0] - 2 * x[:, 1] + rng.normal(scale=0.1, size=200)
    return x, y


#############################
##### `ExactCellMean` #####
#############################
def test_ExactCellMean_predicts_cell_means():
    x = np.array([[0, 0], [0, 0], [0, 1], [1, 1]], dtype=float)
    y = np.array([1.0, 3.0, 5.0, 7.0])
    model = ExactCellMean().fit(x, y)
    np.testing.assert_array_equal(model.predict(x), [2.0, 2.0, 5.0, 7.0])


def test_ExactCellMean_unseen_cell_gets_global_mean():
    model = ExactCellMean().fit(np.array([[0.0], [1.0]]), np.array([1.0, 3.0]))
    assert model.predict(np.array([[2.0]])).tolist() == [2.0]


def test_ExactCellMean_raise_error_when_cardinality_exceeded():
    x = np.arange(20, dtype=float).reshape(-1, 1)
    with pytest.raises(CellCardinalityExceeded):
        ExactCellMean(max_cardinality=16).fit(x, np.zeros(20))


def test_ExactCellMean_raise_error_with_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        ExactCellMean().fit(np.empty((0, 2)), np.empty(0))


def test_ExactCellMean_predictions_follow_query_order():
    x = np.array([[1.0], [0.0], [1.0], [0.0]])
    model = ExactCellMean().fit(x, np.array([4.0, 0.0, 6.0, 2.0]))
    np.testing.assert_array_equal(model.predict(np.array([[0.0], [1.0], [0.0]])), [1.0, 5.0, 1.0])


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ExactCellMean_invariant_to_row_order(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.integers(0, 3, size=(40, 2)).astype(float), rng.normal(size=40)
    perm = rng.permutation(40)
    queries = np.array([[0.0, 0.0], [2.0, 1.0], [5.0, 5.0]])
    np.testing.assert_array_equal(
        ExactCellMean().fit(x, y).predict(queries),
        ExactCellMean().fit(x[perm], y[perm]).predict(queries),
    )


###########################
##### `KnnRegressor` #####
###########################
def test_KnnRegressor_default_k_is_root_n(continuous_xy):
    x, y = continuous_xy
    assert KnnRegressor().fit(x, y).k_ == 15


def test_KnnRegressor_k_clipped_to_training_size():
    model = KnnRegressor(k=10).fit(np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 2.0]))
    assert model.k_ == 3
    assert model.predict(np.array([[5.0]])).tolist() == [1.0]


def test_KnnRegressor_includes_all_ties():
    x = np.array([[0.0], [1.0], [-1.0], [3.0], [-3.0]])
    model = KnnRegressor(k=2).fit(x, np.array([0.0, 1.0, 3.0, 10.0, 10.0]))
    # Both neighbours at distance 1 tie for second place
    assert model.predict(np.array([[0.0]])).tolist() == [4.0 / 3.0]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_KnnRegressor_invariant_to_row_order(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.integers(0, 4, size=(30, 2)).astype(float), rng.normal(size=30)
    perm = rng.permutation(30)
    queries = rng.normal(size=(5, 2))
    np.testing.assert_array_equal(
        KnnRegressor(k=4).fit(x, y).predict(queries),
        KnnRegressor(k=4).fit(x[perm], y[perm]).predict(queries),
    )


def test_KnnRegressor_chunking_does_not_change_predictions(continuous_xy):
    x, y = continuous_xy
    whole = KnnRegressor(chunk_size=1000).fit(x, y).predict(x)
    chunked = KnnRegressor(chunk_size=7).fit(x, y).predict(x)
    np.testing.assert_allclose(whole, chunked, atol=1e-12)


###############################
##### Other backends #####
###############################
def test_MeanRegressor_predicts_training_mean():
    model = MeanRegressor().fit(np.zeros((3, 0)), np.array([1.0, 2.0, 6.0]))
    assert model.predict(np.zeros((2, 0))).tolist() == [3.0, 3.0]


def test_PiecewiseConstantTree_is_deterministic(continuous_xy):
    x, y = continuous_xy
    first = PiecewiseConstantTree().fit(x, y).predict(x)
    second = PiecewiseConstantTree().fit(x, y).predict(x)
    np.testing.assert_array_equal(first, second)
    assert np.corrcoef(first, y)[0, 1] > 0.8


def test_AutoRegressor_picks_backend_by_cardinality(continuous_xy):
    x, y = continuous_xy
    assert isinstance(AutoRegressor().fit(x, y).estimator_, KnnRegressor)
    discrete = np.round(x).clip(-2, 2)
    assert isinstance(AutoRegressor().fit(discrete, y).estimator_, ExactCellMean)


@pytest.mark.parametrize(
    "backend",
    [MeanRegressor(), ExactCellMean(), KnnRegressor(k=5), AutoRegressor()],
    ids=lambda backend: type(backend).__name__,
)
@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-50, 50))
def test_backends_shift_with_targets(backend, seed, shift):
    rng = np.random.default_rng(seed)
    x, y = rng.integers(0, 3, size=(40, 2)).astype(float), rng.normal(size=40)
    queries = rng.integers(0, 3, size=(6, 2)).astype(float)
    base = backend.fit(x, y).predict(queries)
    shifted = backend.fit(x, y + shift).predict(queries)
    # Equal up to rounding of the shifted sums
    np.testing.assert_allclose(shifted, base + shift, rtol=0, atol=1e-12 * (1 + abs(shift)))


@pytest.mark.parametrize(
    "backend", [MeanRegressor(), ExactCellMean(), KnnRegressor(), PiecewiseConstantTree(), AutoRegressor()]
)
def test_backends_raise_error_on_width_mismatch(backend):
    x = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    backend.fit(x, np.array([1.0, 2.0, 3.0]))
    with pytest.raises(WidthMismatch):
        backend.predict(np.zeros((2, 3)))
