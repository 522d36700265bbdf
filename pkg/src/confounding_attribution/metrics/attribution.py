"""Role-aware attribution metrics and seed-stability summaries."""
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, Literal, Optional, Sequence

import numpy as np
import pandas as pd

from confounding_attribution.exceptions import (
    EmptyConfounderSet,
    InconsistentWidth,
    ZeroTotalMass,
)
from confounding_attribution.shapley.base import rank_order


def confounder_mass(phi: np.ndarray, confounders: Sequence[int]) -> float:
    """Share of the total absolute attribution that lands on ``confounders``.

    >>> confounder_mass(np.array([0.5, -0.25, 0.25]), [0])
    0.5
    """
    abs_phi = np.abs(np.asarray(phi, dtype=np.float64))
    total = abs_phi.sum()
    if total == 0:
        raise ZeroTotalMass("All attributions are zero.")
    return float(abs_phi[list(confounders)].sum() / total)


def confounder_recovery(phi: np.ndarray, confounders: Sequence[int]) -> float:
    """Fraction of ``confounders`` ranked within the top ``len(confounders)`` by ``|phi|``.

    Ties at the cutoff go to the lower covariate index.
    """
    confounders = set(int(j) for j in confounders)
    if not confounders:
        raise EmptyConfounderSet("At least one confounder is required.")
    top = set(rank_order(phi)[: len(confounders)].tolist())
    return len(top & confounders) / len(confounders)


@dataclass(frozen=True, eq=False)
class RankStabilityTable:
    """``counts[j, r]``: number of runs that put covariate ``j`` at rank ``r + 1``."""

    counts: np.ndarray
    n_runs: int
    names: Optional[Sequence[str]] = None

    def to_frame(self) -> pd.DataFrame:
        names = self.names or [str(j) for j in range(len(self.counts))]
        frame = pd.DataFrame(
            self.counts, index=pd.Index(names, name="covariate"), columns=range(1, len(self.counts) + 1)
        )
        return frame.rename_axis(columns="rank")


def _stack_runs(runs: Sequence[np.ndarray]) -> np.ndarray:
    widths = {len(np.asarray(phi)) for phi in runs}
    if len(widths) != 1:
        raise InconsistentWidth(f"Runs have different numbers of covariates: {sorted(widths)}.")
    return np.vstack([np.asarray(phi, dtype=np.float64) for phi in runs])


def rank_stability(
    runs: Sequence[np.ndarray], names: Optional[Sequence[str]] = None
) -> RankStabilityTable:
    """Count how often each covariate lands at each absolute-value rank.

    Raises:
        ValueError: If fewer than two runs are given
        InconsistentWidth: If runs disagree on the number of covariates
    """
    if len(runs) < 2:
        raise ValueError(f"Rank stability needs at least 2 runs, got {len(runs)}.")
    phis = _stack_runs(runs)
    p = phis.shape[1]
    counts = np.zeros((p, p), dtype=int)
    for phi in phis:
        counts[rank_order(phi), np.arange(p)] += 1
    return RankStabilityTable(counts=counts, n_runs=len(runs), names=names)


def stability_frame(
    runs: Sequence[np.ndarray], names: Sequence[str], run_ids: Optional[Sequence] = None
) -> pd.DataFrame:
    """Long-format ``(run, covariate, phi, abs_phi, rank)`` rows, ready for boxplots."""
    phis = _stack_runs(runs)
    if phis.shape[1] != len(names):
        raise InconsistentWidth(f"Got {len(names)} names for {phis.shape[1]} covariates.")
    run_ids = list(range(len(runs))) if run_ids is None else list(run_ids)
    rows = []
    for run, phi in zip(run_ids, phis):
        ranks = np.empty(len(phi), dtype=int)
        ranks[rank_order(phi)] = np.arange(1, len(phi) + 1)
        for j, name in enumerate(names):
            rows.append((run, name, phi[j], abs(phi[j]), ranks[j]))
    return pd.DataFrame(rows, columns=["run", "covariate", "phi", "abs_phi", "rank"])


#############################
##### Function factory #####
#############################
AttributionMetric = Literal["confounder_mass", "confounder_recovery"]
AttributionFunction = Callable[[np.ndarray], float]
ATTRIBUTION_METRICS = {"confounder_mass", "confounder_recovery"}


def attribution_metric_factory(
    metric: AttributionMetric, confounders: Sequence[int]
) -> AttributionFunction:
    """Return the metric function for ``metric`` bound to the true ``confounders``.

    Raises:
        ValueError: If `metric` does not exist in ATTRIBUTION_METRICS
    """
    if metric not in ATTRIBUTION_METRICS:
        raise ValueError(f'"{metric}" is not a valid attribution metric.')

    mapping: Dict[AttributionMetric, AttributionFunction] = {
        "confounder_mass": partial(confounder_mass, confounders=confounders),
        "confounder_recovery": partial(confounder_recovery, confounders=confounders),
    }
    return mapping[metric]
