import logging

from confounding_attribution.shapley.base import (
    Attribution,
    EstimatorConfig,
    SetFunction,
    anchored_design,
    constrained_wls,
    design_matrix,
    evaluate,
)
from confounding_attribution.type import Method

logger = logging.getLogger(__name__)


def kernelshap_estimate(value_fn: SetFunction, p: int, cfg: EstimatorConfig) -> Attribution:
    """Shapley values as the efficiency-constrained, kernel-weighted least-squares fit.

    Sampled coalitions are queried together with their complements. The fit
    is exact at the empty and full coalitions, so ``sum(phi)`` always equals
    ``v([p]) - v(())``.

    Raises:
        BudgetTooSmall: If ``cfg.budget < 2p + 2`` while below ``2**p``
    """
    masks, weights, exhaustive = anchored_design(p, cfg, paired=True)
    logger.info(f"KernelSHAP over {len(masks)} coalitions (exhaustive={exhaustive})")

    values = evaluate(value_fn, masks, n_workers=cfg.n_workers)
    v_empty, v_full = float(values[0]), float(values[1])
    phi = constrained_wls(design_matrix(masks), values, weights, v_empty, v_full)
    return Attribution(
        phi=phi,
        base_value=v_empty,
        full_value=v_full,
        method=Method.KERNELSHAP,
        budget_used=len(masks),
        seed=cfg.seed,
        exhaustive=exhaustive,
    )
