import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from confounding_attribution.data import CoalitionMask
from confounding_attribution.exceptions import (
    BudgetTooSmall,
    DimensionTooLarge,
    InvalidConfig,
    SingularSystem,
)
from confounding_attribution.rng import Stream, stream
from confounding_attribution.type import Method

logger = logging.getLogger(__name__)

SetFunction = Callable[[CoalitionMask], float]
LocalSetFunction = Callable[[CoalitionMask], np.ndarray]

DEFAULT_MAX_EXACT_P = 25
RIDGE = 1e-10
MAX_ATTEMPTS_PER_SAMPLE = 100


@dataclass(frozen=True)
class EstimatorConfig:
    """Shapley estimator settings.

    ``budget`` counts distinct coalitions, the empty and full coalitions
    included. ``None`` asks for exhaustive enumeration.
    """

    method: Method = Method.EXACT
    budget: Optional[int] = None
    seed: int = 0
    max_exact_p: int = DEFAULT_MAX_EXACT_P
    n_workers: Optional[int] = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.budget is not None and self.budget < 2:
            raise BudgetTooSmall(f"`budget` must cover at least the two anchors, got {self.budget}.")
        if self.seed < 0:
            raise InvalidConfig(f"`seed` must be non-negative, got {self.seed}.")
        if self.n_workers is not None and self.n_workers < 1:
            raise InvalidConfig(f"`n_workers` must be strictly positive, got {self.n_workers}.")


@dataclass(frozen=True, eq=False)
class Attribution:
    """Shapley values of one game.

    ``phi`` sums to ``full_value - base_value`` up to ``efficiency_gap``.
    ``local_phi`` (units x covariates) and ``local_base`` are only set by
    exact runs that were given a local value function.
    """

    phi: np.ndarray
    base_value: float
    full_value: float
    method: Method
    budget_used: int
    seed: int
    exhaustive: bool = False
    local_phi: Optional[np.ndarray] = None
    local_base: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.phi)

    @property
    def efficiency_gap(self) -> float:
        return float(self.phi.sum() - (self.full_value - self.base_value))

    @property
    def method_label(self) -> str:
        """``"exact-fallback"`` when a budgeted method enumerated every coalition."""
        if self.exhaustive and self.method != Method.EXACT:
            return "exact-fallback"
        return self.method.value


#############################
##### Budget & sampling #####
#############################
def all_masks(p: int) -> List[CoalitionMask]:
    return [CoalitionMask(bits, p) for bits in range(1 << p)]


def resolve_budget(p: int, cfg: EstimatorConfig) -> bool:
    """Return whether ``cfg`` asks for exhaustive enumeration.

    Raises:
        DimensionTooLarge: If enumeration is needed and ``p > cfg.max_exact_p``
        BudgetTooSmall: If ``2p + 2 > budget < 2**p``
    """
    if cfg.budget is None or cfg.budget >= 1 << p:
        if p > cfg.max_exact_p:
            raise DimensionTooLarge(
                f"Enumerating 2^{p} coalitions exceeds the limit p <= {cfg.max_exact_p}."
            )
        return True
    if cfg.budget < 2 * p + 2:
        raise BudgetTooSmall(f"Budget {cfg.budget} is below 2p + 2 = {2 * p + 2}.")
    return False


def size_distribution(p: int) -> np.ndarray:
    """Probability of each coalition size ``1..p-1`` under the Shapley kernel.

    >>> size_distribution(4).round(4).tolist()
    [0.3636, 0.2727, 0.3636]
    """
    sizes = np.arange(1, p)
    mass = (p - 1) / (sizes * (p - sizes))
    return mass / mass.sum()


def shapley_kernel(p: int, size: int) -> float:
    """Kernel weight ``(p-1) / (C(p, s) * s * (p - s))`` of an interior coalition."""
    return (p - 1) / (math.comb(p, size) * size * (p - size))


def sample_coalitions(p: int, n_samples: int, seed: int, paired: bool) -> List[CoalitionMask]:
    """Draw up to ``n_samples`` distinct interior coalitions.

    Sizes follow :func:`size_distribution`, members are uniform given the size.
    With ``paired`` every draw also brings its complement. Duplicates are
    redrawn; the draw stops early if too many redraws in a row are needed.
    """
    rng = stream(seed, Stream.SAMPLER)
    probs = size_distribution(p)
    sizes = np.arange(1, p)
    full = CoalitionMask.full(p)
    seen = {CoalitionMask.empty(p), full}
    drawn: List[CoalitionMask] = []

    misses = 0
    while len(drawn) < n_samples and misses < MAX_ATTEMPTS_PER_SAMPLE * max(n_samples, 1):
        size = int(rng.choice(sizes, p=probs))
        mask = CoalitionMask.from_indices(rng.choice(p, size=size, replace=False).tolist(), p)
        if mask in seen:
            misses += 1
            continue
        misses = 0
        seen.add(mask)
        drawn.append(mask)
        partner = mask.complement()
        if paired and len(drawn) < n_samples and partner not in seen:
            seen.add(partner)
            drawn.append(partner)

    if len(drawn) < n_samples:
        logger.warning(f"Only {len(drawn)} of {n_samples} distinct coalitions could be drawn")
    return drawn


def design_matrix(masks: Sequence[CoalitionMask]) -> np.ndarray:
    """Membership indicators, one row per coalition."""
    return np.array([mask.to_array() for mask in masks], dtype=bool).reshape(len(masks), -1)


def evaluate(
    value_fn: SetFunction, masks: Sequence[CoalitionMask], n_workers: Optional[int] = 1
) -> np.ndarray:
    """Values of ``masks`` in order, through ``value_fn.evaluate`` when it exists."""
    batch = getattr(value_fn, "evaluate", None)
    if batch is not None:
        return np.asarray(batch(masks, n_workers=n_workers), dtype=np.float64)
    return np.array([value_fn(mask) for mask in masks], dtype=np.float64)


def anchored_design(
    p: int, cfg: EstimatorConfig, paired: bool
) -> Tuple[List[CoalitionMask], np.ndarray, bool]:
    """Coalitions to query (anchors first) and the least-squares weight of each.

    Exhaustive designs weight interior coalitions by the Shapley kernel; sampled
    ones use the kernel over the sampling probability, which is constant.
    Anchors get weight 0 as they enter through the constraint instead.
    """
    exhaustive = resolve_budget(p, cfg)
    anchors = [CoalitionMask.empty(p), CoalitionMask.full(p)]
    if exhaustive:
        interior = [m for m in all_masks(p) if 0 < len(m) < p]
        weights = np.array([shapley_kernel(p, len(m)) for m in interior])
    else:
        interior = sample_coalitions(p, cfg.budget - 2, cfg.seed, paired=paired)
        weights = np.ones(len(interior))
    return anchors + interior, np.concatenate([[0.0, 0.0], weights]), exhaustive


###############################
##### Constrained solving #####
###############################
def constrained_wls(
    z: np.ndarray, values: np.ndarray, weights: np.ndarray, v_empty: float, v_full: float
) -> np.ndarray:
    """Weighted least squares for an additive set function with ``sum(phi) = v_full - v_empty``.

    Solves ``min sum_S w_S (v(S) - v_empty - z_S . phi)^2`` under the
    efficiency constraint by eliminating the Lagrange multiplier.
    """
    p = z.shape[1]
    z = z.astype(np.float64)
    a = z.T @ (weights[:, None] * z)
    b = z.T @ (weights * (values - v_empty))

    if np.linalg.matrix_rank(a) < p:
        warnings.warn(
            f"Weighted least-squares system is singular; adding ridge {RIDGE}", SingularSystem
        )
        logger.warning(f"Weighted least-squares system is singular; adding ridge {RIDGE}")
        a = a + RIDGE * np.eye(p)

    solved = np.linalg.solve(a, np.column_stack([b, np.ones(p)]))
    a_inv_b, a_inv_1 = solved[:, 0], solved[:, 1]
    correction = (a_inv_b.sum() - (v_full - v_empty)) / a_inv_1.sum()
    return a_inv_b - correction * a_inv_1


def stratified_msr(z: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Maximum-sample-reuse estimate stratified by coalition size.

    Every coalition feeds the accumulator of every player: the "with j"
    stratum of its size if ``j`` is a member, the "without j" stratum otherwise.
    Player ``j``'s value averages ``mean(with j, size k+1) - mean(without j, size k)``
    over the sizes ``k`` where both strata are non-empty.

    Returns:
        The estimates and, per player, the number of covered strata
    """
    _, p = z.shape
    sizes = z.sum(axis=1)
    phi = np.zeros(p)
    covered = np.zeros(p, dtype=int)
    for j in range(p):
        diffs = []
        for k in range(p):
            with_j = z[:, j] & (sizes == k + 1)
            without_j = ~z[:, j] & (sizes == k)
            if with_j.any() and without_j.any():
                diffs.append(values[with_j].mean() - values[without_j].mean())
        covered[j] = len(diffs)
        phi[j] = sum(diffs) / len(diffs) if diffs else 0.0
    uncovered = np.flatnonzero(covered == 0)
    if len(uncovered):
        logger.warning(f"No paired size strata sampled for player(s) {uncovered.tolist()}")
    return phi, covered


def rank_order(phi: np.ndarray) -> np.ndarray:
    """Player indices by decreasing ``|phi|``, ties broken by ascending index.

    >>> rank_order(np.array([0.1, -0.5, 0.5, 0.0])).tolist()
    [1, 2, 0, 3]
    """
    phi = np.asarray(phi, dtype=np.float64)
    return np.lexsort((np.arange(len(phi)), -np.abs(phi)))
