import json

import numpy as np
import pandas as pd
import pytest

from confounding_attribution.exceptions import InconsistentWidth
from confounding_attribution.shapley import Attribution, exact_shapley, rank_order
from confounding_attribution.shapley.io import (
    ATTRIBUTION_COLUMNS,
    attribution_frame,
    attribution_to_dict,
    local_frame,
    read_attribution_csv,
    write_attribution_csv,
    write_attribution_json,
)
from confounding_attribution.type import Method

NAMES = ("age", "dose", "site")


@pytest.fixture
def attribution() -> Attribution:
    return Attribution(
        phi=np.array([0.1, -0.4, 0.4]),
        base_value=-0.1,
        full_value=0.0,
        method=Method.KERNELSHAP,
        budget_used=8,
        seed=3,
        exhaustive=True,
    )


def test_rank_order_breaks_ties_by_index():
    assert rank_order(np.array([0.0, 0.0, 0.0])).tolist() == [0, 1, 2]
    assert rank_order(np.array([-1.0, 1.0])).tolist() == [0, 1]


def test_attribution_frame_sorted_by_absolute_value(attribution):
    frame = attribution_frame(attribution, NAMES)
    assert list(frame.columns) == ATTRIBUTION_COLUMNS
    assert frame["covariate"].tolist() == ["dose", "site", "age"]
    assert frame["rank"].tolist() == [1, 2, 3]
    np.testing.assert_allclose(frame["abs_phi"], [0.4, 0.4, 0.1])


def test_attribution_frame_name_count_must_match(attribution):
    with pytest.raises(InconsistentWidth):
        attribution_frame(attribution, NAMES[:2])


def test_attribution_csv_keeps_full_precision(tmp_path, attribution):
    path = tmp_path / "attributions.csv"
    write_attribution_csv(attribution, NAMES, path)
    phi = read_attribution_csv(path)
    assert phi.loc["age"] == 0.1 and phi.loc["dose"] == -0.4
    assert pd.read_csv(path).columns.tolist() == ATTRIBUTION_COLUMNS


def test_read_attribution_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_attribution_csv(tmp_path / "missing.csv")


def test_attribution_json_carries_method_label(tmp_path, attribution):
    path = tmp_path / "attribution.json"
    write_attribution_json(attribution, NAMES, path)
    block = json.loads(path.read_text())
    assert block["method"] == "exact-fallback"
    assert block["covariates"] == list(NAMES)
    assert block == json.loads(json.dumps(attribution_to_dict(attribution, NAMES)))


def test_local_frame_long_format():
    table = np.arange(16, dtype=float).reshape(8, 2)
    attr = exact_shapley(lambda m: float(table[m.bits].mean()), 3, local_fn=lambda m: table[m.bits])
    x = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    frame = local_frame(attr, NAMES, x=x)
    assert len(frame) == 6
    assert frame.loc[frame["unit"] == 1, "value"].tolist() == [4.0, 5.0, 6.0]
    assert frame.loc[frame["unit"] == 0, "covariate"].tolist() == list(NAMES)


def test_local_frame_requires_local_values(attribution):
    with pytest.raises(ValueError):
        local_frame(attribution, NAMES)
