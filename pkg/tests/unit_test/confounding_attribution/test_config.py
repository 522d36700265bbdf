import json

import pytest

from confounding_attribution.config import (
    BackendConfig,
    BenchmarkConfig,
    DatasetSource,
    EstimatorSettings,
    RunConfig,
    apply_overrides,
    read_json,
)
from confounding_attribution.exceptions import InvalidConfig
from confounding_attribution.regression import KnnRegressor
from confounding_attribution.type import Method

RUN_BLOCK = {
    "data": {"dgp": {"kind": "curth", "preset": "curth4", "n": 200}},
    "estimator": {"method": "kernelshap", "budget": 12},
    "seeds": [3, 4],
}


def test_RunConfig_from_dict_defaults():
    cfg = RunConfig.from_dict(RUN_BLOCK)
    assert cfg.backend.kind == "auto"
    assert cfg.value_mode == "signed"
    assert cfg.feature_drop is None
    assert cfg.estimator.build(seed=3).method == Method.KERNELSHAP


def test_RunConfig_round_trips_through_dict():
    cfg = RunConfig.from_dict(RUN_BLOCK)
    block = json.loads(json.dumps(cfg.to_dict()))
    assert block["schema_version"] == 1
    assert RunConfig.from_dict(block) == cfg


@pytest.mark.parametrize(
    "target,dataset_seeds,estimator_seeds",
    [("both", [3, 4], [3, 4]), ("estimator", [None, None], [3, 4]), ("dataset", [3, 4], [3, 3])],
)
def test_RunConfig_seed_target(target, dataset_seeds, estimator_seeds):
    cfg = RunConfig.from_dict({**RUN_BLOCK, "seed_target": target})
    assert [cfg.dataset_seed(s) for s in cfg.seeds] == dataset_seeds
    assert [cfg.estimator_seed(s) for s in cfg.seeds] == estimator_seeds


@pytest.mark.parametrize(
    "block",
    [
        {**RUN_BLOCK, "colour": "blue"},
        {**RUN_BLOCK, "value_mode": "cubic"},
        {**RUN_BLOCK, "seeds": []},
        {**RUN_BLOCK, "seeds": [-1]},
        {**RUN_BLOCK, "estimator": {"method": "banzhaf"}},
        {**RUN_BLOCK, "backend": {"kind": "forest"}},
        {**RUN_BLOCK, "feature_drop": {"strategies": ["worst_k"]}},
        {"seeds": [0]},
    ],
)
def test_RunConfig_raise_error_with_invalid_block(block):
    with pytest.raises(InvalidConfig):
        RunConfig.from_dict(block)


def test_DatasetSource_needs_exactly_one_source():
    with pytest.raises(InvalidConfig):
        DatasetSource()
    with pytest.raises(InvalidConfig):
        DatasetSource(csv="a.csv", dgp={"kind": "cancellation"})


def test_DatasetSource_seed_replaces_generator_seed():
    source = DatasetSource(dgp={"kind": "cancellation", "n": 50, "seed": 0})
    assert (source.load().x == source.load(seed=0).x).all()
    assert not (source.load(seed=0).x == source.load(seed=1).x).all()


def test_BackendConfig_builds_with_params():
    backend = BackendConfig(kind="knn", params={"k": 4}).build()
    assert isinstance(backend, KnnRegressor) and backend.k == 4


def test_BackendConfig_raise_error_with_bad_params():
    with pytest.raises(InvalidConfig):
        BackendConfig(kind="knn", params={"depth": 4}).build()


def test_EstimatorSettings_builds_estimator_config():
    cfg = EstimatorSettings(method="msr", budget=40).build(seed=9, n_workers=2)
    assert (cfg.method, cfg.budget, cfg.seed, cfg.n_workers) == (Method.MSR, 40, 9, 2)


def test_BenchmarkConfig_defaults():
    cfg = BenchmarkConfig.from_dict({})
    assert cfg.dimensions == [25] and cfg.budgets == [256, 512, 1024]
    assert cfg.methods == ["msr", "regression_msr"]


@pytest.mark.parametrize("block", [{"methods": ["sampling"]}, {"confounder_share": 0.0}, {"seeds": []}])
def test_BenchmarkConfig_raise_error_with_invalid_block(block):
    with pytest.raises(InvalidConfig):
        BenchmarkConfig.from_dict(block)


def test_read_json_errors(tmp_path):
    assert read_json(None) == {}
    with pytest.raises(FileNotFoundError):
        read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidConfig):
        read_json(bad)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(InvalidConfig):
        read_json(listing)


def test_apply_overrides_skips_unset_values():
    block = {"estimator": {"method": "exact"}}
    apply_overrides(block, [("estimator.method", None), ("estimator.budget", 64), ("seeds", [1])])
    assert block == {"estimator": {"method": "exact", "budget": 64}, "seeds": [1]}
