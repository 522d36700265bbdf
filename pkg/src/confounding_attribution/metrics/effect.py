"""Treatment-effect accuracy and the feature-drop protocol."""
import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.model_selection import train_test_split

from confounding_attribution.bias_game import fit_outcome_model
from confounding_attribution.data import Dataset
from confounding_attribution.exceptions import InvalidSpec, LengthMismatch, NoGroundTruth
from confounding_attribution.regression import backend_factory
from confounding_attribution.rng import Stream, stream
from confounding_attribution.shapley.base import rank_order
from confounding_attribution.utils.multiproc import parallelize

logger = logging.getLogger(__name__)

DropStrategy = Literal["top_k", "random", "bottom_k"]
DROP_STRATEGIES = ("top_k", "random", "bottom_k")
DEFAULT_TEST_FRACTION = 0.3


def pehe(tau_hat: np.ndarray, tau_true: np.ndarray) -> float:
    """Root-mean-square error between estimated and true unit-level effects.

    >>> pehe(np.array([3.0, -1.0]), np.ones(2))
    2.0
    """
    tau_hat = np.asarray(tau_hat, dtype=np.float64).reshape(-1)
    tau_true = np.asarray(tau_true, dtype=np.float64).reshape(-1)
    if len(tau_hat) != len(tau_true):
        raise LengthMismatch(f"`tau_hat` has {len(tau_hat)} entries but `tau_true` has {len(tau_true)}.")
    return float(np.sqrt(np.mean((tau_hat - tau_true) ** 2)))


def columns_to_drop(phi: np.ndarray, k: int, strategy: DropStrategy, seed: int = 0) -> Tuple[int, ...]:
    """The ``k`` covariates removed by ``strategy``.

    >>> columns_to_drop(np.array([0.1, -0.9, 0.5]), 2, "top_k")
    (1, 2)
    >>> columns_to_drop(np.array([0.1, -0.9, 0.5]), 1, "bottom_k")
    (0,)
    """
    p = len(phi)
    if strategy not in DROP_STRATEGIES:
        raise ValueError(f'"{strategy}" is not a valid drop strategy.')
    if not 0 <= k < p:
        raise InvalidSpec("k", f"must lie in [0, {p}), got {k}")
    order = rank_order(phi)
    if strategy == "top_k":
        dropped = order[:k]
    elif strategy == "bottom_k":
        dropped = order[p - k :]
    else:
        dropped = stream(seed, Stream.FEATURE_DROP, k).choice(p, size=k, replace=False)
    return tuple(sorted(int(j) for j in dropped))


def _drop_cell(
    cell: Tuple[int, str],
    train: Dataset,
    test: Dataset,
    phi: np.ndarray,
    backend: BaseEstimator,
    seed: int,
) -> Tuple[int, str, float]:
    k, strategy = cell
    dropped = columns_to_drop(phi, k, strategy, seed)
    model = fit_outcome_model(train.drop_columns(dropped), backend)
    tau_hat = model.cate(test.drop_columns(dropped).x)
    return k, strategy, pehe(tau_hat, test.tau_true)


def feature_drop_pehe(
    ds: Dataset,
    phi: np.ndarray,
    k_values: Sequence[int],
    strategies: Sequence[DropStrategy] = DROP_STRATEGIES,
    backend: Optional[BaseEstimator] = None,
    test_fraction: float = DEFAULT_TEST_FRACTION,
    seed: int = 0,
    n_workers: Optional[int] = 1,
) -> pd.DataFrame:
    """Refit the plug-in CATE without the ``k`` covariates picked by each strategy.

    Units are split once into train/test (stratified on treatment); each
    ``(k, strategy)`` cell refits the per-arm outcome model on the reduced
    training covariates and scores PEHE on the test units.

    Returns:
        Long-format frame with columns ``k, strategy, pehe``

    Raises:
        NoGroundTruth: If ``ds`` carries no true treatment effects
    """
    if ds.tau_true is None:
        raise NoGroundTruth("Feature-drop PEHE needs a dataset with known treatment effects.")
    if len(phi) != ds.p:
        raise LengthMismatch(f"Got {len(phi)} attributions for {ds.p} covariates.")
    if not 0 < test_fraction < 1:
        raise InvalidSpec("test_fraction", f"must lie in (0, 1), got {test_fraction}")
    backend = backend_factory("auto") if backend is None else backend

    train_rows, test_rows = train_test_split(
        np.arange(ds.n), test_size=test_fraction, random_state=seed, stratify=ds.a
    )
    train, test = ds.take(np.sort(train_rows)), ds.take(np.sort(test_rows))

    cells: List[Tuple[int, str]] = [(int(k), s) for k in k_values for s in strategies]
    logger.info(f"Feature-drop PEHE over {len(cells)} (k, strategy) cells")
    results = parallelize(
        _drop_cell,
        cells,
        n_workers=n_workers,
        desc="Feature drop",
        train=train,
        test=test,
        phi=np.asarray(phi, dtype=np.float64),
        backend=backend,
        seed=seed,
    )
    return pd.DataFrame(results, columns=["k", "strategy", "pehe"])
