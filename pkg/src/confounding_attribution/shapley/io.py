"""Attribution serialization: ranked CSV, JSON metadata and per-unit long format."""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from confounding_attribution.exceptions import InconsistentWidth, MissingColumn
from confounding_attribution.shapley.base import Attribution, rank_order

logger = logging.getLogger(__name__)

ATTRIBUTION_COLUMNS = ["covariate", "phi", "abs_phi", "rank"]


def _check_names(attr: Attribution, names: Sequence[str]) -> None:
    if len(names) != attr.p:
        raise InconsistentWidth(f"Got {len(names)} names for {attr.p} attributions.")


def attribution_frame(attr: Attribution, names: Sequence[str]) -> pd.DataFrame:
    """One row per covariate, sorted by decreasing ``abs_phi`` (rank 1 first)."""
    _check_names(attr, names)
    order = rank_order(attr.phi)
    return pd.DataFrame(
        {
            "covariate": [names[j] for j in order],
            "phi": attr.phi[order],
            "abs_phi": np.abs(attr.phi[order]),
            "rank": np.arange(1, attr.p + 1),
        }
    )


def write_attribution_csv(attr: Attribution, names: Sequence[str], path: Union[str, Path]) -> None:
    attribution_frame(attr, names).to_csv(path, index=False, float_format="%.17g")


def read_attribution_csv(path: Union[str, Path]) -> pd.Series:
    """Read ``phi`` back as a Series indexed by covariate name (file order)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Attribution file {path.as_posix()} does not exist.")
    frame = pd.read_csv(path)
    for col in ("covariate", "phi"):
        if col not in frame.columns:
            raise MissingColumn(col)
    return frame.set_index("covariate")["phi"].astype(np.float64)


def attribution_to_dict(attr: Attribution, names: Sequence[str]) -> Dict[str, Any]:
    _check_names(attr, names)
    return {
        "covariates": list(names),
        "phi": attr.phi.tolist(),
        "base_value": attr.base_value,
        "full_value": attr.full_value,
        "efficiency_gap": attr.efficiency_gap,
        "method": attr.method_label,
        "budget_used": attr.budget_used,
        "seed": attr.seed,
        "diagnostics": attr.diagnostics,
    }


def write_attribution_json(attr: Attribution, names: Sequence[str], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(attribution_to_dict(attr, names), f, indent=2)


def local_frame(
    attr: Attribution, names: Sequence[str], x: Optional[np.ndarray] = None
) -> pd.DataFrame:
    """Per-unit attributions in long format (``unit, covariate, local_phi[, value]``).

    ``x`` adds each unit's covariate value, which is what a beeswarm plot colours by.
    """
    _check_names(attr, names)
    if attr.local_phi is None:
        raise ValueError("This attribution carries no local values (exact runs only).")
    n = attr.local_phi.shape[0]
    frame = pd.DataFrame(
        {
            "unit": np.repeat(np.arange(n), attr.p),
            "covariate": np.tile(np.asarray(names, dtype=object), n),
            "local_phi": attr.local_phi.reshape(-1),
            "local_base": np.repeat(attr.local_base, attr.p),
        }
    )
    if x is not None:
        frame["value"] = np.asarray(x, dtype=np.float64).reshape(-1)
    return frame
