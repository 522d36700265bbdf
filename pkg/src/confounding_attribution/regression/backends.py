"""Built-in nuisance regressors.

Every backend is a deterministic scikit-learn regressor. None of them is
trained by gradient descent; fitting only stores (summaries of) the training
set, so each coalition-specific regression is cheap to set up.
"""
import logging
import math
from typing import Optional

import numpy as np
import pandas as pd
import scipy.spatial.distance
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.tree import DecisionTreeRegressor

from confounding_attribution.exceptions import (
    CellCardinalityExceeded,
    EmptyTrainingSet,
    WidthMismatch,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_CARDINALITY = 16


def _check_xy(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if y is None:
        return X
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) == 0:
        raise EmptyTrainingSet("Cannot fit a regression on zero training rows.")
    if len(X) != len(y):
        raise ValueError(f"`X` has {len(X)} rows but `y` has {len(y)}.")
    return X, y


def _order_free_mean(y: np.ndarray) -> float:
    return float(np.sort(y).mean())


class _WidthCheckMixin:
    n_features_in_: int

    def _check_width(self, X: np.ndarray) -> np.ndarray:
        X = _check_xy(X)
        if X.shape[1] != self.n_features_in_:
            raise WidthMismatch(
                f"Model was fit on {self.n_features_in_} column(s) but got {X.shape[1]}."
            )
        return X


class MeanRegressor(_WidthCheckMixin, RegressorMixin, BaseEstimator):
    """Predict the training mean everywhere (the empty-coalition regression)."""

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        self.mean_ = _order_free_mean(y)
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_width(X)
        return np.full(len(X), self.mean_)


class ExactCellMean(_WidthCheckMixin, RegressorMixin, BaseEstimator):
    """Predict the training mean of the cell that matches the query exactly.

    A cell is one distinct row of the (discrete) feature matrix. Queries that
    fall in a cell absent from training get the global training mean.
    Means are bit-identical under permutations of the training rows; shifting
    the targets by a constant shifts the predictions by it up to rounding.
    """

    def __init__(self, max_cardinality: int = DEFAULT_MAX_CARDINALITY):
        """
        Args:
            max_cardinality: Largest number of distinct values allowed per column
        """
        self.max_cardinality = max_cardinality

    def fit(self, X, y):
        """Store per-cell means of ``y``.

        Raises:
            EmptyTrainingSet: If ``y`` is empty
            CellCardinalityExceeded: If a column has more than ``max_cardinality`` distinct values
        """
        X, y = _check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        self.global_mean_ = _order_free_mean(y)

        for j in range(X.shape[1]):
            n_distinct = len(np.unique(X[:, j]))
            if n_distinct > self.max_cardinality:
                raise CellCardinalityExceeded(
                    f"Column {j} has {n_distinct} distinct values (max {self.max_cardinality})."
                )

        self.columns_ = [f"x{j}" for j in range(X.shape[1])]
        if self.columns_:
            # Sorting fixes the summation order, so row permutations give identical means
            cells = (
                pd.DataFrame(X, columns=self.columns_)
                .assign(_target=y)
                .sort_values([*self.columns_, "_target"], kind="mergesort", ignore_index=True)
            )
            self.cell_means_ = (
                cells.groupby(self.columns_, sort=True)["_target"]
                .mean()
                .rename("_prediction")
                .reset_index()
            )
        else:
            self.cell_means_ = None
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_width(X)
        if self.cell_means_ is None:
            return np.full(len(X), self.global_mean_)
        queries = pd.DataFrame(X, columns=self.columns_)
        matched = queries.merge(self.cell_means_, on=self.columns_, how="left", sort=False)
        return matched["_prediction"].fillna(self.global_mean_).to_numpy(dtype=np.float64)


class KnnRegressor(_WidthCheckMixin, RegressorMixin, BaseEstimator):
    """k-nearest-neighbour mean on standardized columns.

    Columns are standardized with training statistics. All training points tied
    with the k-th nearest distance are included, so the neighbourhood does not
    depend on row order.
    Predictions are bit-identical under permutations of the training rows and
    shift with the targets up to rounding.
    """

    def __init__(self, k: Optional[int] = None, chunk_size: int = 512):
        """
        Args:
            k: Number of neighbours. Defaults to ``ceil(sqrt(n_train))``
            chunk_size: Number of query rows per distance block
        """
        self.k = k
        self.chunk_size = chunk_size

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        n = len(y)

        k = math.ceil(math.sqrt(n)) if self.k is None else int(self.k)
        if k < 1:
            raise ValueError(f"`k` must be strictly positive, got {k}.")
        if k > n:
            logger.warning(f"k={k} exceeds the {n} training rows; using k={n}")
            k = n
        self.k_ = k

        # Column statistics over sorted values do not depend on row order
        ordered = np.sort(X, axis=0)
        self.center_ = ordered.mean(axis=0)
        scale = ordered.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        self.train_ = (X - self.center_) / self.scale_
        self.targets_ = y
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_width(X)
        if self.n_features_in_ == 0:
            return np.full(len(X), _order_free_mean(self.targets_))

        queries = (X - self.center_) / self.scale_
        predictions = np.empty(len(queries))
        for start in range(0, len(queries), self.chunk_size):
            block = queries[start : start + self.chunk_size]
            dist = scipy.spatial.distance.cdist(block, self.train_, metric="sqeuclidean")
            kth = np.partition(dist, self.k_ - 1, axis=1)[:, [self.k_ - 1]]
            within = dist <= kth
            width = int(within.sum(axis=1).max())
            nearest = np.argpartition(dist, width - 1, axis=1)[:, :width]
            values = np.where(
                np.take_along_axis(within, nearest, axis=1), self.targets_[nearest], 0.0
            )
            # Summing sorted values makes the mean independent of training row order
            values.sort(axis=1)
            predictions[start : start + len(block)] = values.sum(axis=1) / within.sum(axis=1)
        return predictions


class PiecewiseConstantTree(_WidthCheckMixin, RegressorMixin, BaseEstimator):
    """A single CART regression tree with a fixed random state."""

    def __init__(self, max_depth: Optional[int] = 6, min_leaf: int = 20):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        if X.shape[1] == 0:
            self.tree_ = MeanRegressor().fit(X, y)
            return self
        self.tree_ = DecisionTreeRegressor(
            max_depth=self.max_depth,
            min_samples_leaf=min(self.min_leaf, len(y)),
            random_state=0,
        ).fit(X, y)
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_width(X)
        return np.asarray(self.tree_.predict(X), dtype=np.float64)


class AutoRegressor(_WidthCheckMixin, RegressorMixin, BaseEstimator):
    """Exact cell means on low-cardinality designs, k-NN otherwise.

    The choice is made per fit: :class:`ExactCellMean` when every column has at
    most ``max_cardinality`` distinct training values, else :class:`KnnRegressor`
    with ``k = ceil(sqrt(n_train))``.
    """

    def __init__(self, max_cardinality: int = DEFAULT_MAX_CARDINALITY, k: Optional[int] = None):
        self.max_cardinality = max_cardinality
        self.k = k

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        discrete = all(
            len(np.unique(X[:, j])) <= self.max_cardinality for j in range(X.shape[1])
        )
        if discrete:
            self.estimator_ = ExactCellMean(max_cardinality=self.max_cardinality)
        else:
            self.estimator_ = KnnRegressor(k=self.k)
        self.estimator_.fit(X, y)
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_width(X)
        return self.estimator_.predict(X)
