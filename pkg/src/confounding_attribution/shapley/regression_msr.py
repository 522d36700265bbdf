import logging

from confounding_attribution.shapley.base import (
    Attribution,
    EstimatorConfig,
    SetFunction,
    anchored_design,
    constrained_wls,
    design_matrix,
    evaluate,
    stratified_msr,
)
from confounding_attribution.type import Method

logger = logging.getLogger(__name__)


def regression_msr_estimate(value_fn: SetFunction, p: int, cfg: EstimatorConfig) -> Attribution:
    """Additive proxy fit followed by an MSR correction on the residual game.

    Stage one fits ``v(()) + sum_{j in S} c_j`` to the queried values with the
    constrained kernel least squares; the proxy's Shapley values are the
    ``c_j``. Stage two runs the stratified MSR accumulator on the residual
    ``v - proxy`` over the same coalitions and spreads its efficiency gap
    evenly, so the output stays efficient.

    Raises:
        BudgetTooSmall: If ``cfg.budget < 2p + 2`` while below ``2**p``
    """
    masks, weights, exhaustive = anchored_design(p, cfg, paired=True)
    logger.info(f"RegressionMSR over {len(masks)} coalitions (exhaustive={exhaustive})")

    values = evaluate(value_fn, masks, n_workers=cfg.n_workers)
    v_empty, v_full = float(values[0]), float(values[1])
    z = design_matrix(masks)

    coefficients = constrained_wls(z, values, weights, v_empty, v_full)
    residual = values - (v_empty + z @ coefficients)
    correction, covered = stratified_msr(z, residual)
    # The residual game is zero at both anchors
    correction -= correction.sum() / p

    return Attribution(
        phi=coefficients + correction,
        base_value=v_empty,
        full_value=v_full,
        method=Method.REGRESSION_MSR,
        budget_used=len(masks),
        seed=cfg.seed,
        exhaustive=exhaustive,
        diagnostics={
            "proxy_phi": coefficients.tolist(),
            "residual_rms": float((residual**2).mean() ** 0.5),
            "min_covered_strata": int(covered.min()),
        },
    )
