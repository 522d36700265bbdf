"""Synthetic and semi-synthetic data-generating processes with known covariate roles.

All generators are pure functions of their spec (seed included). Draws come
from independent :mod:`~confounding_attribution.rng` streams, one per
covariate block plus one for treatment and one for outcome noise.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from confounding_attribution.data import Dataset
from confounding_attribution.exceptions import EmptyArm, InvalidSpec, LengthMismatch
from confounding_attribution.oracle import CANCELLATION_EXAMPLE
from confounding_attribution.rng import Stream, stream
from confounding_attribution.type import CovariateRole

logger = logging.getLogger(__name__)

MAX_ARM_RESAMPLES = 100

CURTH_BLOCKS = (
    CovariateRole.INSTRUMENT,
    CovariateRole.CONFOUNDER,
    CovariateRole.EFFECT_MODIFIER,
    CovariateRole.OUTCOME_ONLY,
    CovariateRole.NOISE,
)

# (instruments, confounders, effect modifiers, outcome-only, noise)
CURTH_PRESETS: Dict[str, Tuple[int, int, int, int, int]] = {
    "curth4": (1, 1, 1, 1, 0),
    "curth11": (2, 3, 3, 2, 1),
    "curth17": (3, 5, 3, 4, 2),
    "curth100": (15, 40, 15, 15, 15),
}

ACTG_COVARIATES = (
    "age",
    "wtkg",
    "hemo",
    "drugs",
    "karnof",
    "race",
    "gender",
    "symptom",
    "str2",
    "cd40",
    "cd80",
)
ACTG_CONFOUNDERS = ("age", "karnof", "symptom", "str2", "cd40")


def _require(condition: bool, name: str, reason: str) -> None:
    if not condition:
        raise InvalidSpec(name, reason)


#####################
##### DGP specs #####
#####################
@dataclass(frozen=True)
class CurthDgpSpec:
    n_instruments: int
    n_confounders: int
    n_modifiers: int
    n_outcome_only: int
    n_noise: int
    xi: float = 3.0
    gamma_z: float = 1.0
    sigma: float = 1.0
    n: int = 5000
    seed: int = 0

    def __post_init__(self):
        for name in ("n_instruments", "n_confounders", "n_modifiers", "n_outcome_only", "n_noise"):
            _require(getattr(self, name) >= 0, name, "role counts must be non-negative")
        _require(self.p >= 1, "n_confounders", "the DGP needs at least one covariate")
        _require(
            self.n_confounders >= 1 or self.xi == 0,
            "n_confounders",
            "at least one confounder is required when xi != 0",
        )
        _require(self.sigma >= 0, "sigma", "noise sd must be non-negative")
        _require(self.n >= 2, "n", "sample size must be at least 2")
        _require(self.seed >= 0, "seed", "seed must be non-negative")

    @property
    def counts(self) -> Tuple[int, int, int, int, int]:
        return (
            self.n_instruments,
            self.n_confounders,
            self.n_modifiers,
            self.n_outcome_only,
            self.n_noise,
        )

    @property
    def p(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class CancellationSpec:
    n: int = 5000
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        _require(self.n >= 8, "n", "the cancellation DGP needs n >= 8")
        _require(self.sigma >= 0, "sigma", "noise sd must be non-negative")


@dataclass(frozen=True)
class CancellingConfounderSpec:
    n: int = 5000
    seed: int = 0

    def __post_init__(self):
        _require(self.n >= 2, "n", "sample size must be at least 2")


@dataclass(frozen=True)
class ProxyConfounderSpec:
    n: int = 5000
    noise_sd: float = 0.5
    seed: int = 0
    treatment_coef: float = 2.0
    outcome_slope: float = 2.0
    sigma: float = 1.0

    def __post_init__(self):
        _require(self.n >= 2, "n", "sample size must be at least 2")
        _require(self.noise_sd > 0, "noise_sd", "proxy noise sd must be strictly positive")
        _require(self.sigma >= 0, "sigma", "noise sd must be non-negative")


@dataclass(frozen=True)
class SemiSynthSpec:
    confounder_indices: Tuple[int, ...]
    alpha0: float
    alpha: Tuple[float, ...]
    beta0: float
    beta: Tuple[float, ...]
    tau: float
    sigma: float
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "confounder_indices", tuple(int(j) for j in self.confounder_indices))
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        if not len(self.alpha) == len(self.beta) == len(self.confounder_indices):
            raise LengthMismatch(
                f"|alpha|={len(self.alpha)}, |beta|={len(self.beta)} and "
                f"|confounder_indices|={len(self.confounder_indices)} must agree."
            )
        _require(
            len(set(self.confounder_indices)) == len(self.confounder_indices),
            "confounder_indices",
            "indices must be unique",
        )
        _require(self.sigma >= 0, "sigma", "noise sd must be non-negative")


DgpSpec = Union[
    CurthDgpSpec, CancellationSpec, CancellingConfounderSpec, ProxyConfounderSpec, SemiSynthSpec
]


def curth_preset(name: str, **overrides) -> CurthDgpSpec:
    """Return one of the benchmark role compositions in ``CURTH_PRESETS``."""
    if name not in CURTH_PRESETS:
        raise InvalidSpec("preset", f'"{name}" is not one of {sorted(CURTH_PRESETS)}')
    return CurthDgpSpec(*CURTH_PRESETS[name], **overrides)


def curth_ablation_spec(p: int, confounder_share: float = 0.4, **overrides) -> CurthDgpSpec:
    """A ``p``-covariate spec with ``confounder_share`` confounders.

    The remaining covariates are spread as evenly as possible over instruments,
    effect modifiers, outcome-only and noise blocks.

    >>> curth_ablation_spec(25).counts
    (4, 10, 4, 4, 3)
    """
    _require(p >= 1, "p", "at least one covariate is required")
    n_confounders = max(1, int(round(confounder_share * p)))
    rest = p - n_confounders
    others = [rest // 4 + (1 if i < rest % 4 else 0) for i in range(4)]
    return CurthDgpSpec(others[0], n_confounders, others[1], others[2], others[3], **overrides)


######################
##### Generators #####
######################
def _covariate_block(seed: int, block: int, n: int, width: int) -> np.ndarray:
    return stream(seed, Stream.COVARIATES, block).standard_normal((n, width))


def _assign(seed: int, propensity: np.ndarray, attempt: int = 0) -> np.ndarray:
    uniforms = stream(seed, Stream.TREATMENT, attempt).random(len(propensity))
    return (uniforms < propensity).astype(np.float64)


def _assign_both_arms(seed: int, propensity: np.ndarray) -> np.ndarray:
    """Draw assignments, redrawing until both arms hold at least one unit.

    Raises:
        EmptyArm: If an arm is still empty after ``MAX_ARM_RESAMPLES`` draws
    """
    n = len(propensity)
    for attempt in range(MAX_ARM_RESAMPLES):
        a = _assign(seed, propensity, attempt)
        if 0 < a.sum() < n:
            return a
        logger.warning(f"Empty treatment arm on draw {attempt}; resampling")
    raise EmptyArm(f"Treatment arm still empty after {MAX_ARM_RESAMPLES} draws.")


def _noise(seed: int, n: int, sd: float) -> np.ndarray:
    return sd * stream(seed, Stream.NOISE).standard_normal(n)


def curth_propensity_logit(x: np.ndarray, spec: CurthDgpSpec) -> np.ndarray:
    """The assignment logit ``xi * (m_C - omega) + gamma_z * z``.

    ``omega`` is the sample median of ``m_C`` over the rows of ``x``.
    """
    bounds = np.cumsum((0,) + spec.counts)
    instruments = x[:, bounds[0] : bounds[1]]
    confounders = x[:, bounds[1] : bounds[2]]

    m_c = (confounders**2).mean(axis=1) if confounders.shape[1] else np.zeros(len(x))
    omega = float(np.median(m_c))
    z = instruments.mean(axis=1) if instruments.shape[1] else np.zeros(len(x))
    return spec.xi * (m_c - omega) + spec.gamma_z * z


def generate_curth(spec: CurthDgpSpec) -> Dataset:
    """Sum-of-squares outcome surfaces with a median-centred confounding score.

    Covariates are independent standard normals partitioned, in order, into
    instrument, confounder, effect-modifier, outcome-only and noise blocks.
    """
    blocks = [
        _covariate_block(spec.seed, b, spec.n, count) for b, count in enumerate(spec.counts)
    ]
    x = np.hstack(blocks)
    roles = tuple(role for role, count in zip(CURTH_BLOCKS, spec.counts) for _ in range(count))

    _, confounders, modifiers, outcome_only, _ = blocks
    mu0 = (confounders**2).sum(axis=1) + (outcome_only**2).sum(axis=1)
    tau = (modifiers**2).sum(axis=1)
    mu1 = mu0 + tau

    propensity = expit(curth_propensity_logit(x, spec))
    a = _assign_both_arms(spec.seed, propensity)
    y = np.where(a == 1.0, mu1, mu0) + _noise(spec.seed, spec.n, spec.sigma)

    names = tuple(f"x{j + 1}" for j in range(spec.p))
    return Dataset(x=x, a=a, y=y, names=names, roles=roles, tau_true=tau, propensity=propensity)


def generate_cancellation(n: int, sigma: float, seed: int) -> Dataset:
    """Two binary confounders whose biases cancel in the crude comparison.

    Cell propensities and outcome means come from ``CANCELLATION_EXAMPLE``;
    the treatment effect is zero everywhere.
    """
    spec = CancellationSpec(n=n, sigma=sigma, seed=seed)
    x = (stream(spec.seed, Stream.COVARIATES, 0).random((spec.n, 2)) < 0.5).astype(np.float64)

    pi_table = {cell.x: float(cell.pi) for cell in CANCELLATION_EXAMPLE.cells}
    mu_table = {cell.x: float(cell.mu0) for cell in CANCELLATION_EXAMPLE.cells}
    cells = [(int(x1), int(x2)) for x1, x2 in x]
    propensity = np.array([pi_table[c] for c in cells])
    mu = np.array([mu_table[c] for c in cells])

    a = _assign_both_arms(spec.seed, propensity)
    y = mu + _noise(spec.seed, spec.n, spec.sigma)
    return Dataset(
        x=x,
        a=a,
        y=y,
        names=("x1", "x2"),
        roles=(CovariateRole.CONFOUNDER, CovariateRole.CONFOUNDER),
        tau_true=np.zeros(spec.n),
        propensity=propensity,
    )


def generate_cancelling_confounder(n: int, seed: int) -> Dataset:
    """Shared prognostic component that cancels in the treatment effect.

    The confounder ``C`` drives both assignment and the baseline outcome but
    not the CATE ``1 + 3 M**2``.
    """
    spec = CancellingConfounderSpec(n=n, seed=seed)
    z, c, m, o = (_covariate_block(spec.seed, b, spec.n, 1)[:, 0] for b in range(4))
    h = 2 * c + o + 0.5 * o**2
    tau = 1 + 3 * m**2

    propensity = expit(3 * c + z)
    a = _assign_both_arms(spec.seed, propensity)
    y = h + a * tau + _noise(spec.seed, spec.n, 0.5)
    return Dataset(
        x=np.column_stack([z, c, m, o]),
        a=a,
        y=y,
        names=("Z", "C", "M", "O"),
        roles=(
            CovariateRole.INSTRUMENT,
            CovariateRole.CONFOUNDER,
            CovariateRole.EFFECT_MODIFIER,
            CovariateRole.OUTCOME_ONLY,
        ),
        tau_true=tau,
        propensity=propensity,
    )


def generate_proxy_confounder(
    n: int,
    noise_sd: float,
    seed: int,
    treatment_coef: float = 2.0,
    outcome_slope: float = 2.0,
    sigma: float = 1.0,
) -> Dataset:
    """Two noisy proxies of a latent confounder ``U`` plus ``U`` itself.

    Treatment depends on ``X1 = U + e1`` only, both outcome arms on
    ``X2 = U + e2`` only, and ``X3 = U`` enters neither.
    """
    spec = ProxyConfounderSpec(
        n=n,
        noise_sd=noise_sd,
        seed=seed,
        treatment_coef=treatment_coef,
        outcome_slope=outcome_slope,
        sigma=sigma,
    )
    u = _covariate_block(spec.seed, 0, spec.n, 1)[:, 0]
    x1 = u + spec.noise_sd * _covariate_block(spec.seed, 1, spec.n, 1)[:, 0]
    x2 = u + spec.noise_sd * _covariate_block(spec.seed, 2, spec.n, 1)[:, 0]

    propensity = expit(spec.treatment_coef * x1)
    a = _assign_both_arms(spec.seed, propensity)
    y = spec.outcome_slope * x2 + _noise(spec.seed, spec.n, spec.sigma)
    return Dataset(
        x=np.column_stack([x1, x2, u]),
        a=a,
        y=y,
        names=("x1", "x2", "x3"),
        roles=(CovariateRole.INSTRUMENT, CovariateRole.OUTCOME_ONLY, CovariateRole.CONFOUNDER),
        tau_true=np.zeros(spec.n),
        propensity=propensity,
    )


def generate_semisynth(
    covariates: np.ndarray, spec: SemiSynthSpec, names: Optional[Sequence[str]] = None
) -> Dataset:
    """Synthetic assignment and outcomes on top of a given covariate matrix.

    The designated confounder block drives a logistic propensity and a linear
    outcome with constant effect ``tau``; the other columns are carried along.

    Raises:
        LengthMismatch: If coefficient lengths disagree or an index is out of range
        EmptyArm: If an arm is still empty after ``MAX_ARM_RESAMPLES`` draws
    """
    x = np.asarray(covariates, dtype=np.float64)
    if x.ndim != 2:
        raise LengthMismatch(f"`covariates` must be a 2-d matrix, got {x.ndim} dimension(s).")
    if not np.isfinite(x).all():
        raise InvalidSpec("covariates", "covariates must be finite")
    n, p = x.shape
    if any(not 0 <= j < p for j in spec.confounder_indices):
        raise LengthMismatch(f"`confounder_indices` {spec.confounder_indices} out of range for p={p}.")

    x_c = x[:, list(spec.confounder_indices)]
    propensity = expit(spec.alpha0 + x_c @ np.asarray(spec.alpha))
    a = _assign_both_arms(spec.seed, propensity)

    y0 = spec.beta0 + x_c @ np.asarray(spec.beta) + _noise(spec.seed, n, spec.sigma)
    y = y0 + a * spec.tau

    confounders = set(spec.confounder_indices)
    roles = tuple(
        CovariateRole.CONFOUNDER if j in confounders else CovariateRole.UNKNOWN for j in range(p)
    )
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(p))
    return Dataset(
        x=x,
        a=a,
        y=y,
        names=names,
        roles=roles,
        tau_true=np.full(n, spec.tau),
        propensity=propensity,
    )


def simulate_actg_covariates(n: int = 1054, seed: int = 42) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Draw an ACTG-175-like baseline covariate matrix.

    Marginals roughly follow the trial's published baseline table; CD8 is
    correlated with CD4. Continuous columns (incl. Karnofsky) are standardized,
    binary columns are kept as 0/1.
    """
    gen = {name: stream(seed, Stream.COVARIATES, i) for i, name in enumerate(ACTG_COVARIATES)}
    cd40 = gen["cd40"].normal(350.0, 119.0, n).clip(200.0, 500.0)
    columns = {
        "age": gen["age"].normal(35.2, 8.7, n).clip(12.0, 70.0),
        "wtkg": gen["wtkg"].normal(75.1, 13.3, n).clip(31.0, 160.0),
        "hemo": (gen["hemo"].random(n) < 0.08).astype(float),
        "drugs": (gen["drugs"].random(n) < 0.13).astype(float),
        "karnof": gen["karnof"].choice([70.0, 80.0, 90.0, 100.0], size=n, p=[0.02, 0.08, 0.37, 0.53]),
        "race": (gen["race"].random(n) < 0.29).astype(float),
        "gender": (gen["gender"].random(n) < 0.83).astype(float),
        "symptom": (gen["symptom"].random(n) < 0.17).astype(float),
        "str2": (gen["str2"].random(n) < 0.58).astype(float),
        "cd40": cd40,
        "cd80": (600.0 + 1.1 * cd40 + gen["cd80"].normal(0.0, 420.0, n)).clip(40.0, None),
    }
    x = np.column_stack([columns[name] for name in ACTG_COVARIATES])
    for j in range(x.shape[1]):
        if len(np.unique(x[:, j])) > 2:
            x[:, j] = (x[:, j] - x[:, j].mean()) / x[:, j].std()
    return x, ACTG_COVARIATES


def actg_semisynth_spec(seed: int = 42, randomized: bool = False) -> SemiSynthSpec:
    """The ACTG semi-synthetic parameterization (or its randomized counterpart)."""
    indices = tuple(ACTG_COVARIATES.index(name) for name in ACTG_CONFOUNDERS)
    alpha0, alpha = (0.0, (0.0,) * 5) if randomized else (-0.2, (0.2, -0.8, 0.9, 0.5, -0.9))
    return SemiSynthSpec(
        confounder_indices=indices,
        alpha0=alpha0,
        alpha=alpha,
        beta0=0.0,
        beta=(0.1, -0.5, 0.5, 0.25, -0.55),
        tau=0.45,
        sigma=0.35,
        seed=seed,
    )


##########################
##### Config (de)ser #####
##########################
@dataclass(frozen=True)
class SemiSynthSource:
    """A semi-synthetic DGP over simulated ACTG-like covariates."""

    spec: SemiSynthSpec
    n: int = 1054
    covariate_seed: int = 42


_SPEC_KINDS: Dict[str, Any] = {
    "curth": CurthDgpSpec,
    "cancellation": CancellationSpec,
    "cancelling_confounder": CancellingConfounderSpec,
    "proxy_confounder": ProxyConfounderSpec,
}
DGP_KINDS = set(_SPEC_KINDS) | {"semisynth"}


def spec_to_dict(spec: Union[DgpSpec, SemiSynthSource]) -> Dict[str, Any]:
    if isinstance(spec, SemiSynthSource):
        return {
            "kind": "semisynth",
            "n": spec.n,
            "covariate_seed": spec.covariate_seed,
            **dataclasses.asdict(spec.spec),
        }
    kind = next(k for k, cls in _SPEC_KINDS.items() if isinstance(spec, cls))
    return {"kind": kind, **dataclasses.asdict(spec)}


def spec_from_dict(block: Mapping[str, Any]) -> Union[DgpSpec, SemiSynthSource]:
    """Build a spec from a JSON config block ``{"kind": ..., <spec fields>}``.

    Curth blocks may name a ``preset`` instead of spelling out the role counts.
    ``semisynth`` blocks may name ``"preset": "actg"`` or ``"actg_randomized"``.

    Raises:
        InvalidSpec: On an unknown kind or field
    """
    block = dict(block)
    kind = block.pop("kind", None)
    if kind not in DGP_KINDS:
        raise InvalidSpec("kind", f'"{kind}" is not one of {sorted(DGP_KINDS)}')
    preset = block.pop("preset", None)

    try:
        if kind == "semisynth":
            n = int(block.pop("n", 1054))
            covariate_seed = int(block.pop("covariate_seed", 42))
            if preset is not None:
                if preset not in ("actg", "actg_randomized"):
                    raise InvalidSpec("preset", f'"{preset}" is not a semisynth preset')
                spec = actg_semisynth_spec(
                    seed=int(block.pop("seed", 42)), randomized=preset == "actg_randomized"
                )
                if block:
                    spec = dataclasses.replace(spec, **block)
            else:
                spec = SemiSynthSpec(**block)
            return SemiSynthSource(spec=spec, n=n, covariate_seed=covariate_seed)
        if kind == "curth" and preset is not None:
            return curth_preset(preset, **block)
        return _SPEC_KINDS[kind](**block)
    except TypeError as e:
        raise InvalidSpec(kind, str(e)) from e


def generate(spec: Union[DgpSpec, SemiSynthSource]) -> Dataset:
    """Dispatch a spec to its generator."""
    if isinstance(spec, CurthDgpSpec):
        return generate_curth(spec)
    if isinstance(spec, CancellationSpec):
        return generate_cancellation(spec.n, spec.sigma, spec.seed)
    if isinstance(spec, CancellingConfounderSpec):
        return generate_cancelling_confounder(spec.n, spec.seed)
    if isinstance(spec, ProxyConfounderSpec):
        return generate_proxy_confounder(
            spec.n, spec.noise_sd, spec.seed, spec.treatment_coef, spec.outcome_slope, spec.sigma
        )
    if isinstance(spec, SemiSynthSource):
        covariates, names = simulate_actg_covariates(spec.n, spec.covariate_seed)
        return generate_semisynth(covariates, spec.spec, names=names)
    raise InvalidSpec("kind", f"unsupported spec type {type(spec).__name__}")


def with_seed(spec: Union[DgpSpec, SemiSynthSource], seed: int) -> Union[DgpSpec, SemiSynthSource]:
    """Return ``spec`` with its (assignment/outcome) seed replaced."""
    if isinstance(spec, SemiSynthSource):
        return dataclasses.replace(spec, spec=dataclasses.replace(spec.spec, seed=seed))
    return dataclasses.replace(spec, seed=seed)
