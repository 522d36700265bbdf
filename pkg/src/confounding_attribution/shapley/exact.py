import logging
import math
from typing import Optional

import numpy as np

from confounding_attribution.exceptions import DimensionTooLarge
from confounding_attribution.shapley.base import (
    Attribution,
    EstimatorConfig,
    LocalSetFunction,
    SetFunction,
    all_masks,
    evaluate,
)
from confounding_attribution.type import Method

logger = logging.getLogger(__name__)


def subset_weights(p: int) -> np.ndarray:
    """``s! (p - s - 1)! / p!`` for every predecessor-set size ``s = 0..p-1``.

    >>> subset_weights(3).tolist() == [1 / 3, 1 / 6, 1 / 3]
    True
    """
    return np.array(
        [math.factorial(s) * math.factorial(p - s - 1) / math.factorial(p) for s in range(p)]
    )


def shapley_from_table(table: np.ndarray, p: int) -> np.ndarray:
    """Shapley values from a table of all ``2**p`` coalition values indexed by mask bits.

    ``table`` may carry trailing axes (e.g. one column per unit); the
    result then has shape ``table.shape[1:] + (p,)``.
    """
    bits = np.arange(1 << p)
    sizes = np.zeros(1 << p, dtype=int)
    for j in range(p):
        sizes += (bits >> j) & 1

    weights = subset_weights(p)
    phi = []
    for j in range(p):
        without = bits[(bits >> j) & 1 == 0]
        diffs = table[without | (1 << j)] - table[without]
        phi.append(np.tensordot(weights[sizes[without]], diffs, axes=(0, 0)))
    return np.stack(phi, axis=-1)


def exact_shapley(
    value_fn: SetFunction,
    p: int,
    cfg: Optional[EstimatorConfig] = None,
    local_fn: Optional[LocalSetFunction] = None,
) -> Attribution:
    """Evaluate every coalition once and apply the subset-sum form of the Shapley value.

    Args:
        value_fn: Global value of a coalition
        p: Number of players
        cfg: Only ``max_exact_p``, ``seed`` and ``n_workers`` are read
        local_fn: Optional per-unit values of a coalition; adds local attributions

    Raises:
        DimensionTooLarge: If ``p`` exceeds ``cfg.max_exact_p``
    """
    cfg = EstimatorConfig(method=Method.EXACT) if cfg is None else cfg
    if p > cfg.max_exact_p:
        raise DimensionTooLarge(f"Exact enumeration of 2^{p} coalitions exceeds p <= {cfg.max_exact_p}.")

    masks = all_masks(p)
    logger.info(f"Exact Shapley over {len(masks)} coalitions")
    values = evaluate(value_fn, masks, n_workers=cfg.n_workers)
    phi = shapley_from_table(values, p)

    local_phi = local_base = None
    if local_fn is not None:
        local_table = np.stack([np.asarray(local_fn(mask), dtype=np.float64) for mask in masks])
        local_phi = shapley_from_table(local_table, p)
        local_base = local_table[0]

    return Attribution(
        phi=phi,
        base_value=float(values[0]),
        full_value=float(values[-1]),
        method=Method.EXACT,
        budget_used=len(masks),
        seed=cfg.seed,
        exhaustive=True,
        local_phi=local_phi,
        local_base=local_base,
    )
