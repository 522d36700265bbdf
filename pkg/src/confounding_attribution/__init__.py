from .bias_game import (
    CoalitionValue,
    GameHandle,
    PseudoOutcomes,
    build_game,
    cate_projection,
    global_value,
    local_values,
    observational_contrast,
)
from .data import CoalitionMask, Dataset, load_csv, standardize, subset_columns
from .shapley import (
    Attribution,
    EstimatorConfig,
    estimate_shapley_values,
    exact_shapley,
    kernelshap_estimate,
    msr_estimate,
    regression_msr_estimate,
)
from .type import CovariateRole, Method

__version__ = "0.1.0"
