from typing import Callable, Dict, Optional

from confounding_attribution.shapley.base import (
    Attribution,
    EstimatorConfig,
    LocalSetFunction,
    SetFunction,
    rank_order,
    shapley_kernel,
    size_distribution,
)
from confounding_attribution.shapley.exact import exact_shapley, shapley_from_table
from confounding_attribution.shapley.kernelshap import kernelshap_estimate
from confounding_attribution.shapley.msr import msr_estimate
from confounding_attribution.shapley.regression_msr import regression_msr_estimate
from confounding_attribution.type import Method

ESTIMATORS = {method.value for method in Method}


def estimator_factory(method: str) -> Callable[..., Attribution]:
    """Return the estimator function for ``method``.

    Raises:
        ValueError: If ``method`` does not exist in ESTIMATORS
    """
    if method not in ESTIMATORS:
        raise ValueError(f'"{method}" is not a valid Shapley estimator.')

    mapping: Dict[Method, Callable[..., Attribution]] = {
        Method.EXACT: exact_shapley,
        Method.MSR: msr_estimate,
        Method.KERNELSHAP: kernelshap_estimate,
        Method.REGRESSION_MSR: regression_msr_estimate,
    }
    return mapping[Method(method)]


def estimate_shapley_values(
    value_fn: SetFunction,
    p: int,
    cfg: EstimatorConfig,
    local_fn: Optional[LocalSetFunction] = None,
) -> Attribution:
    """Run the estimator named by ``cfg.method``.

    Local values are only used by exact runs.
    """
    estimator = estimator_factory(cfg.method.value)
    if cfg.method == Method.EXACT:
        return estimator(value_fn, p, cfg, local_fn=local_fn)
    return estimator(value_fn, p, cfg)
