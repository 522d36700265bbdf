import logging

from confounding_attribution.data import CoalitionMask
from confounding_attribution.shapley.base import (
    Attribution,
    EstimatorConfig,
    SetFunction,
    all_masks,
    design_matrix,
    evaluate,
    resolve_budget,
    sample_coalitions,
    stratified_msr,
)
from confounding_attribution.type import Method

logger = logging.getLogger(__name__)


def msr_estimate(value_fn: SetFunction, p: int, cfg: EstimatorConfig) -> Attribution:
    """Maximum-sample-reuse Monte Carlo estimate.

    Coalition sizes are drawn from the Shapley-kernel size law with uniform
    membership given the size, and every queried coalition updates the
    accumulators of all ``p`` players. The estimate is not forced to be
    efficient; the gap is reported on the result.

    Only exhaustive budgets are exact on additive games. With sampled
    coalitions each stratum mean also averages the other players' memberships,
    so an additive game is recovered only in expectation.

    Raises:
        BudgetTooSmall: If ``cfg.budget < 2p + 2`` while below ``2**p``
    """
    exhaustive = resolve_budget(p, cfg)
    anchors = [CoalitionMask.empty(p), CoalitionMask.full(p)]
    if exhaustive:
        masks = anchors + [m for m in all_masks(p) if 0 < len(m) < p]
    else:
        masks = anchors + sample_coalitions(p, cfg.budget - 2, cfg.seed, paired=False)
    logger.info(f"MSR over {len(masks)} coalitions (exhaustive={exhaustive})")

    values = evaluate(value_fn, masks, n_workers=cfg.n_workers)
    phi, covered = stratified_msr(design_matrix(masks), values)
    attribution = Attribution(
        phi=phi,
        base_value=float(values[0]),
        full_value=float(values[1]),
        method=Method.MSR,
        budget_used=len(masks),
        seed=cfg.seed,
        exhaustive=exhaustive,
        diagnostics={"min_covered_strata": int(covered.min())},
    )
    logger.info(f"MSR efficiency gap: {attribution.efficiency_gap:.3g}")
    return attribution
