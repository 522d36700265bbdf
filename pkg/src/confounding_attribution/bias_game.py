"""The confounding-bias cooperative game over covariate coalitions.

For a coalition ``S`` the residual bias of adjusting only for ``X_S`` is
``b_S = delta_S - g_S``: the observational contrast within ``X_S`` minus the
projection of the full-adjustment CATE onto ``X_S``. Coalition values are
negated biases, so a covariate's Shapley value is its signed contribution to
removing confounding bias.
"""
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator

from confounding_attribution.data import CoalitionMask, Dataset, subset_columns
from confounding_attribution.exceptions import InvalidConfig, WidthMismatch
from confounding_attribution.regression import FittedModel, fit, predict
from confounding_attribution.rng import Stream, stream
from confounding_attribution.type import VALUE_MODES, ValueMode
from confounding_attribution.utils.multiproc import parallelize

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PseudoOutcomes:
    """Unit-level plug-in CATEs ``tau_hat`` and their mean ``tau_bar``."""

    tau_hat: np.ndarray
    tau_bar: float


@dataclass(frozen=True, eq=False)
class CoalitionValue:
    """Everything computed for one coalition.

    ``global_value`` always uses the shortcut ``-(mean(delta_s) - tau_bar)``;
    ``g_s`` and ``local_values`` are only filled once a local value was asked for.
    """

    mask: CoalitionMask
    global_value: float
    delta_s: np.ndarray
    g_s: Optional[np.ndarray] = None
    local_values: Optional[np.ndarray] = None

    @property
    def has_locals(self) -> bool:
        return self.local_values is not None


def _mean(values: np.ndarray) -> float:
    # Plain left-to-right accumulation so the result never depends on SIMD blocking
    return float(np.add.accumulate(values)[-1] / len(values))


def _apply_mode(bias: Union[float, np.ndarray], mode: ValueMode):
    if mode == "signed":
        return -bias
    if mode == "absolute":
        return -np.abs(bias)
    return -np.square(bias)


class GameHandle:
    """A dataset, a regression backend and the memoized coalition values built on them.

    Instances are callable: ``game(mask)`` is the global value of ``mask``
    under the configured value mode. The cache is safe for concurrent use;
    the first value written for a mask wins.
    """

    def __init__(
        self,
        ds: Dataset,
        backend: BaseEstimator,
        pseudo: PseudoOutcomes,
        value_mode: ValueMode = "signed",
        folds: Optional[np.ndarray] = None,
    ):
        if value_mode not in VALUE_MODES:
            raise InvalidConfig(f'"{value_mode}" is not one of {sorted(VALUE_MODES)}.')
        self.ds = ds
        self.backend = backend
        self.pseudo = pseudo
        self.value_mode = value_mode
        self.folds = folds
        self.cache: Dict[CoalitionMask, CoalitionValue] = {}
        self.cache_hits: Dict[CoalitionMask, int] = {}
        self._lock = threading.Lock()

    @property
    def p(self) -> int:
        return self.ds.p

    @property
    def eval_counter(self) -> int:
        """``1`` for the full outcome model plus one per distinct coalition evaluated."""
        with self._lock:
            return 1 + len(self.cache)

    def __call__(self, mask: CoalitionMask) -> float:
        return global_value(self, mask)

    def local(self, mask: CoalitionMask) -> np.ndarray:
        return local_values(self, mask)

    def evaluate(
        self, masks: Sequence[CoalitionMask], n_workers: Optional[int] = 1, local: bool = False
    ) -> List[Union[float, np.ndarray]]:
        """Evaluate many coalitions, optionally on a thread pool, in input order."""
        func = self.local if local else self.__call__
        return parallelize(
            func,
            list(masks),
            n_workers=n_workers,
            threads=True,
            desc="Evaluating coalitions",
            leave=False,
        )

    def _lookup(self, mask: CoalitionMask, need_locals: bool) -> Optional[CoalitionValue]:
        with self._lock:
            entry = self.cache.get(mask)
            if entry is not None and (entry.has_locals or not need_locals):
                self.cache_hits[mask] = self.cache_hits.get(mask, 0) + 1
                return entry
        return None

    def _store(self, entry: CoalitionValue) -> CoalitionValue:
        with self._lock:
            existing = self.cache.get(entry.mask)
            if existing is None or (entry.has_locals and not existing.has_locals):
                self.cache[entry.mask] = entry
                self.cache_hits.setdefault(entry.mask, 0)
                return entry
            return existing

    def coalition_log(self) -> List[Dict[str, Union[str, float, int]]]:
        """One record per evaluated coalition, in canonical mask order."""
        with self._lock:
            entries = sorted(self.cache.items())
            return [
                {
                    "mask_bits_hex": mask.hex,
                    "global_value": entry.global_value,
                    "n_cache_hits": self.cache_hits.get(mask, 0),
                }
                for mask, entry in entries
            ]

    def write_coalition_log(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for record in self.coalition_log():
                f.write(json.dumps(record) + "\n")


################################
##### Nuisance regressions #####
################################
def _fold_assignment(n: int, n_folds: int, seed: int) -> np.ndarray:
    if n_folds < 2:
        raise InvalidConfig(f"Cross-fitting needs at least 2 folds, got {n_folds}.")
    if n_folds > n:
        raise InvalidConfig(f"Cannot split {n} units into {n_folds} folds.")
    order = stream(seed, Stream.SPLIT).permutation(n)
    folds = np.empty(n, dtype=int)
    folds[order] = np.arange(n) % n_folds
    return folds


def _fit_predict(
    backend: BaseEstimator,
    x: np.ndarray,
    y: np.ndarray,
    train: np.ndarray,
    folds: Optional[np.ndarray],
) -> np.ndarray:
    """Regress ``y`` on ``x`` using rows in ``train``, predict every row.

    With ``folds``, each row is predicted by a model that never saw its fold.
    """
    if folds is None:
        return predict(fit(backend, x[train], y[train]), x)
    predictions = np.empty(len(x))
    for k in np.unique(folds):
        held_out = folds == k
        model = fit(backend, x[train & ~held_out], y[train & ~held_out])
        predictions[held_out] = predict(model, x[held_out])
    return predictions


@dataclass(frozen=True)
class OutcomeModel:
    """Per-arm outcome regressions ``m(x, 1)`` and ``m(x, 0)``."""

    treated: FittedModel
    untreated: FittedModel

    def cate(self, x: np.ndarray) -> np.ndarray:
        return predict(self.treated, x) - predict(self.untreated, x)


def fit_outcome_model(ds: Dataset, backend: BaseEstimator, x: Optional[np.ndarray] = None) -> OutcomeModel:
    """Fit one regression of ``y`` on ``x`` (default: all covariates) per treatment arm."""
    x = ds.x if x is None else x
    treated = ds.treated
    return OutcomeModel(
        treated=fit(backend, x[treated], ds.y[treated]),
        untreated=fit(backend, x[~treated], ds.y[~treated]),
    )


def _arm_contrast(game_ds: Dataset, backend: BaseEstimator, x: np.ndarray, folds) -> np.ndarray:
    if folds is None:
        return fit_outcome_model(game_ds, backend, x).cate(x)
    treated = game_ds.treated
    m1 = _fit_predict(backend, x, game_ds.y, treated, folds)
    m0 = _fit_predict(backend, x, game_ds.y, ~treated, folds)
    return m1 - m0


def build_game(
    ds: Dataset,
    backend: BaseEstimator,
    value_mode: ValueMode = "signed",
    cross_fit_folds: Optional[int] = None,
    seed: int = 0,
) -> GameHandle:
    """Fit the full outcome model per arm and precompute the pseudo-outcomes.

    Args:
        ds: Observational dataset
        backend: Unfitted regression backend used for every nuisance regression
        value_mode: ``"signed"`` (default), ``"absolute"`` or ``"squared"``
        cross_fit_folds: If set, every regression predicts each unit from the other folds
        seed: Seed of the fold split
    """
    folds = None if cross_fit_folds is None else _fold_assignment(ds.n, cross_fit_folds, seed)
    tau_hat = _arm_contrast(ds, backend, ds.x, folds)
    tau_hat.flags.writeable = False
    pseudo = PseudoOutcomes(tau_hat=tau_hat, tau_bar=_mean(tau_hat))

    n_untreated, n_treated = ds.arm_sizes
    logger.info(
        f"Built bias game: n={ds.n}, p={ds.p}, arms=({n_untreated}, {n_treated}), "
        f"backend={type(backend).__name__}, tau_bar={pseudo.tau_bar:.6g}"
    )
    return GameHandle(ds, backend, pseudo, value_mode=value_mode, folds=folds)


def _check_mask(game: GameHandle, mask: CoalitionMask) -> None:
    if mask.width != game.p:
        raise WidthMismatch(f"Mask width {mask.width} does not match p={game.p}.")


def observational_contrast(game: GameHandle, mask: CoalitionMask) -> np.ndarray:
    """Per-unit treated-minus-untreated outcome regression on ``X_S``.

    The empty coalition gives the constant difference of arm means.
    """
    _check_mask(game, mask)
    ds = game.ds
    if len(mask) == 0:
        treated = ds.treated
        return np.full(ds.n, _mean(ds.y[treated]) - _mean(ds.y[~treated]))
    return _arm_contrast(ds, game.backend, subset_columns(ds, mask), game.folds)


def cate_projection(game: GameHandle, mask: CoalitionMask) -> np.ndarray:
    """Regress the pseudo-outcomes on ``X_S``; the empty coalition gives ``tau_bar``."""
    _check_mask(game, mask)
    ds = game.ds
    if len(mask) == 0:
        return np.full(ds.n, game.pseudo.tau_bar)
    every_row = np.ones(ds.n, dtype=bool)
    return _fit_predict(
        game.backend, subset_columns(ds, mask), game.pseudo.tau_hat, every_row, game.folds
    )


def evaluate_coalition(game: GameHandle, mask: CoalitionMask, with_locals: bool = False) -> CoalitionValue:
    """Compute (or fetch) the cached :class:`CoalitionValue` of ``mask``."""
    _check_mask(game, mask)
    entry = game._lookup(mask, need_locals=with_locals)
    if entry is not None:
        return entry

    cached = game.cache.get(mask)
    delta_s = cached.delta_s if cached is not None else observational_contrast(game, mask)
    delta_s.flags.writeable = False
    bias = _mean(delta_s) - game.pseudo.tau_bar
    value = float(_apply_mode(bias, game.value_mode))

    g_s = local = None
    if with_locals:
        g_s = cate_projection(game, mask)
        local = _apply_mode(delta_s - g_s, game.value_mode)
        g_s.flags.writeable = False
        local.flags.writeable = False

    entry = game._store(
        CoalitionValue(mask=mask, global_value=value, delta_s=delta_s, g_s=g_s, local_values=local)
    )
    logger.debug(f"nu({mask.hex}) = {entry.global_value:.6g}")
    return entry


def local_values(game: GameHandle, mask: CoalitionMask) -> np.ndarray:
    """Per-unit values ``-(delta_S - g_S)`` (under the game's value mode)."""
    return evaluate_coalition(game, mask, with_locals=True).local_values


def global_value(game: GameHandle, mask: CoalitionMask) -> float:
    """The population value ``-(mean(delta_S) - tau_bar)`` (under the game's value mode).

    Does not fit the CATE projection.
    """
    return evaluate_coalition(game, mask).global_value
