"""Run configuration: JSON files, defaults and command-line overrides."""
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Type, TypeVar, Union

from sklearn.base import BaseEstimator

from confounding_attribution.data import Dataset, load_csv, standardize
from confounding_attribution.dgp import generate, spec_from_dict, with_seed
from confounding_attribution.exceptions import InvalidConfig
from confounding_attribution.metrics.effect import DROP_STRATEGIES
from confounding_attribution.regression import REGRESSION_BACKENDS, backend_factory
from confounding_attribution.shapley import ESTIMATORS, EstimatorConfig
from confounding_attribution.shapley.base import DEFAULT_MAX_EXACT_P
from confounding_attribution.type import VALUE_MODES, Method

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SeedTarget = Literal["both", "estimator", "dataset"]
SEED_TARGETS = {"both", "estimator", "dataset"}

C = TypeVar("C")


def _from_dict(cls: Type[C], block: Optional[Mapping[str, Any]], where: str) -> C:
    block = dict(block or {})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(block) - known
    if unknown:
        raise InvalidConfig(f"Unknown key(s) {sorted(unknown)} in `{where}`.")
    return cls(**block)


@dataclass
class BackendConfig:
    kind: str = "auto"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in REGRESSION_BACKENDS:
            raise InvalidConfig(f'"{self.kind}" is not one of {sorted(REGRESSION_BACKENDS)}.')

    def build(self) -> BaseEstimator:
        try:
            return backend_factory(self.kind, **self.params)
        except TypeError as e:
            raise InvalidConfig(f"Bad parameters for backend {self.kind!r}: {e}") from e


@dataclass
class EstimatorSettings:
    method: str = Method.EXACT.value
    budget: Optional[int] = None
    max_exact_p: int = DEFAULT_MAX_EXACT_P

    def __post_init__(self):
        if self.method not in ESTIMATORS:
            raise InvalidConfig(f'"{self.method}" is not one of {sorted(ESTIMATORS)}.')

    def build(self, seed: int, n_workers: Optional[int] = 1) -> EstimatorConfig:
        return EstimatorConfig(
            method=Method(self.method),
            budget=self.budget,
            seed=seed,
            max_exact_p=self.max_exact_p,
            n_workers=n_workers,
        )


@dataclass
class DatasetSource:
    """Exactly one of ``csv`` (a file) or ``dgp`` (a generator block)."""

    csv: Optional[str] = None
    treatment_col: str = "a"
    outcome_col: str = "y"
    roles: Optional[str] = None
    impute: Optional[str] = None
    standardize: bool = False
    dgp: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        if (self.csv is None) == (self.dgp is None):
            raise InvalidConfig("Exactly one dataset source (`csv` or `dgp`) must be given.")
        if self.impute not in (None, "median"):
            raise InvalidConfig(f'"{self.impute}" is not a valid imputation strategy.')
        if self.dgp is not None:
            spec_from_dict(self.dgp)

    def load(self, seed: Optional[int] = None) -> Dataset:
        """Read or generate the dataset; ``seed`` replaces the generator's seed."""
        if self.csv is not None:
            ds = load_csv(
                self.csv, self.treatment_col, self.outcome_col, roles_path=self.roles, impute=self.impute
            )
        else:
            spec = spec_from_dict(self.dgp)
            ds = generate(spec if seed is None else with_seed(spec, seed))
        return standardize(ds) if self.standardize else ds


@dataclass
class FeatureDropSettings:
    k_values: List[int] = field(default_factory=lambda: [0, 5])
    strategies: List[str] = field(default_factory=lambda: list(DROP_STRATEGIES))
    test_fraction: float = 0.3

    def __post_init__(self):
        invalid = set(self.strategies) - set(DROP_STRATEGIES)
        if invalid:
            raise InvalidConfig(f"Invalid drop strategies {sorted(invalid)}.")


@dataclass
class RunConfig:
    data: DatasetSource
    backend: BackendConfig = field(default_factory=BackendConfig)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    value_mode: str = "signed"
    seeds: List[int] = field(default_factory=lambda: [0])
    seed_target: SeedTarget = "both"
    output_dir: str = "runs"
    cross_fit_folds: Optional[int] = None
    local: bool = False
    feature_drop: Optional[FeatureDropSettings] = None

    def __post_init__(self):
        if self.value_mode not in VALUE_MODES:
            raise InvalidConfig(f'"{self.value_mode}" is not one of {sorted(VALUE_MODES)}.')
        if not self.seeds:
            raise InvalidConfig("`seeds` must be non-empty.")
        if any(s < 0 for s in self.seeds):
            raise InvalidConfig("`seeds` must be non-negative.")
        if self.seed_target not in SEED_TARGETS:
            raise InvalidConfig(f'"{self.seed_target}" is not one of {sorted(SEED_TARGETS)}.')

    def dataset_seed(self, seed: int) -> Optional[int]:
        return None if self.seed_target == "estimator" else seed

    def estimator_seed(self, seed: int) -> int:
        return self.seeds[0] if self.seed_target == "dataset" else seed

    @classmethod
    def from_dict(cls, block: Mapping[str, Any]) -> "RunConfig":
        block = dict(block)
        block.pop("schema_version", None)
        if "data" not in block:
            raise InvalidConfig("Missing `data` block.")
        block["data"] = _from_dict(DatasetSource, block["data"], "data")
        block["backend"] = _from_dict(BackendConfig, block.get("backend"), "backend")
        block["estimator"] = _from_dict(EstimatorSettings, block.get("estimator"), "estimator")
        if block.get("feature_drop") is not None:
            block["feature_drop"] = _from_dict(FeatureDropSettings, block["feature_drop"], "feature_drop")
        return _from_dict(cls, block, "run")

    def to_dict(self) -> Dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, **dataclasses.asdict(self)}


@dataclass
class BenchmarkConfig:
    """Grid over covariate dimension, budget, estimator and seed on the ablation DGP."""

    dimensions: List[int] = field(default_factory=lambda: [25])
    budgets: List[int] = field(default_factory=lambda: [256, 512, 1024])
    methods: List[str] = field(default_factory=lambda: [Method.MSR.value, Method.REGRESSION_MSR.value])
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    confounder_share: float = 0.4
    n: int = 5000
    backend: BackendConfig = field(default_factory=BackendConfig)
    value_mode: str = "signed"
    output_dir: str = "benchmark"

    def __post_init__(self):
        invalid = set(self.methods) - ESTIMATORS
        if invalid:
            raise InvalidConfig(f"Invalid estimator(s) {sorted(invalid)}.")
        if not self.seeds:
            raise InvalidConfig("`seeds` must be non-empty.")
        if not 0 < self.confounder_share <= 1:
            raise InvalidConfig(f"`confounder_share` must lie in (0, 1], got {self.confounder_share}.")
        if self.value_mode not in VALUE_MODES:
            raise InvalidConfig(f'"{self.value_mode}" is not one of {sorted(VALUE_MODES)}.')

    @classmethod
    def from_dict(cls, block: Mapping[str, Any]) -> "BenchmarkConfig":
        block = dict(block)
        block.pop("schema_version", None)
        block["backend"] = _from_dict(BackendConfig, block.get("backend"), "backend")
        return _from_dict(cls, block, "benchmark")

    def to_dict(self) -> Dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, **dataclasses.asdict(self)}


def read_json(path: Optional[Union[str, Path]]) -> Dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file {path.as_posix()} does not exist.")
    with open(path, encoding="utf-8") as f:
        try:
            block = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidConfig(f"{path.name} is not valid JSON: {e}") from e
    if not isinstance(block, dict):
        raise InvalidConfig(f"{path.name} must hold a JSON object.")
    return block


def set_path(block: Dict[str, Any], dotted: str, value: Any) -> None:
    """Set ``block["a"]["b"] = value`` for ``dotted = "a.b"``, creating levels as needed.

    >>> cfg = {}
    >>> set_path(cfg, "estimator.budget", 128)
    >>> cfg
    {'estimator': {'budget': 128}}
    """
    *parents, leaf = dotted.split(".")
    for key in parents:
        block = block.setdefault(key, {})
    block[leaf] = value


def apply_overrides(block: Dict[str, Any], overrides: Sequence[tuple]) -> Dict[str, Any]:
    """Apply ``(dotted key, value)`` overrides whose value is not ``None``."""
    for dotted, value in overrides:
        if value is not None:
            set_path(block, dotted, value)
    return block
