"""
This module contains attribution-quality metrics (confounder Shapley mass and
recovery, rank stability) and treatment-effect metrics (PEHE, feature drop).
"""

from .attribution import (
    ATTRIBUTION_METRICS,
    RankStabilityTable,
    attribution_metric_factory,
    confounder_mass,
    confounder_recovery,
    rank_stability,
    stability_frame,
)
from .effect import DROP_STRATEGIES, columns_to_drop, feature_drop_pehe, pehe
