"""Observational datasets, covariate roles and coalition masks."""
import logging
from dataclasses import dataclass, replace
from functools import total_ordering
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from confounding_attribution.exceptions import (
    EmptyArm,
    InvalidDataset,
    LengthMismatch,
    MissingColumn,
    NonBinaryTreatment,
    NonNumericCell,
    WidthMismatch,
)
from confounding_attribution.type import CovariateRole

logger = logging.getLogger(__name__)

ImputeStrategy = Literal["median"]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """An i.i.d. sample of covariates ``x``, binary treatment ``a`` and outcome ``y``.

    ``roles``, ``tau_true`` and ``propensity`` are ground-truth metadata attached
    by the data generators. The bias game never reads them.
    """

    x: np.ndarray
    a: np.ndarray
    y: np.ndarray
    names: Tuple[str, ...]
    roles: Optional[Tuple[CovariateRole, ...]] = None
    tau_true: Optional[np.ndarray] = None
    propensity: Optional[np.ndarray] = None

    def __post_init__(self):
        x = _frozen(self.x)
        if x.ndim != 2:
            raise InvalidDataset(f"`x` must be a 2-d matrix, got {x.ndim} dimension(s).")
        n, p = x.shape
        a = _frozen(np.asarray(self.a).reshape(-1))
        y = _frozen(np.asarray(self.y).reshape(-1))

        if n < 2:
            raise InvalidDataset(f"A dataset needs at least 2 units, got {n}.")
        if p < 1:
            raise InvalidDataset("A dataset needs at least 1 covariate.")
        if len(a) != n or len(y) != n:
            raise LengthMismatch(
                f"`x` has {n} rows but `a` has {len(a)} and `y` has {len(y)} entries."
            )
        if not np.isin(a, (0.0, 1.0)).all():
            raise NonBinaryTreatment(
                f"Treatment must be 0/1, found {sorted(set(np.unique(a)) - {0.0, 1.0})}."
            )
        n_treated = int(a.sum())
        if n_treated == 0 or n_treated == n:
            raise EmptyArm(
                f"Both treatment arms must be non-empty (treated={n_treated}, control={n - n_treated})."
            )
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise InvalidDataset("`x` and `y` must only contain finite values.")

        names = tuple(str(name) for name in self.names)
        if len(names) != p:
            raise LengthMismatch(f"Got {len(names)} names for {p} covariates.")
        if len(set(names)) != p:
            raise InvalidDataset("Covariate names must be unique.")

        roles = self.roles
        if roles is not None:
            roles = tuple(CovariateRole(role) for role in roles)
            if len(roles) != p:
                raise LengthMismatch(f"Got {len(roles)} roles for {p} covariates.")

        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "roles", roles)
        for attr in ("tau_true", "propensity"):
            value = getattr(self, attr)
            if value is not None:
                value = _frozen(np.asarray(value).reshape(-1))
                if len(value) != n:
                    raise LengthMismatch(f"`{attr}` has {len(value)} entries for {n} units.")
                object.__setattr__(self, attr, value)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def treated(self) -> np.ndarray:
        """Boolean index of treated units."""
        return self.a == 1.0

    @property
    def arm_sizes(self) -> Tuple[int, int]:
        """(untreated, treated) counts."""
        n_treated = int(self.treated.sum())
        return self.n - n_treated, n_treated

    def indices_of(self, role: CovariateRole) -> Tuple[int, ...]:
        if self.roles is None:
            return ()
        return tuple(j for j, r in enumerate(self.roles) if r == role)

    @property
    def confounders(self) -> Tuple[int, ...]:
        return self.indices_of(CovariateRole.CONFOUNDER)

    def take(self, rows: Sequence[int]) -> "Dataset":
        """Return the dataset restricted to ``rows`` (metadata follows)."""
        rows = np.asarray(rows)
        return replace(
            self,
            x=self.x[rows],
            a=self.a[rows],
            y=self.y[rows],
            tau_true=None if self.tau_true is None else self.tau_true[rows],
            propensity=None if self.propensity is None else self.propensity[rows],
        )

    def drop_columns(self, columns: Iterable[int]) -> "Dataset":
        drop = set(int(j) for j in columns)
        keep = [j for j in range(self.p) if j not in drop]
        return replace(
            self,
            x=self.x[:, keep],
            names=tuple(self.names[j] for j in keep),
            roles=None if self.roles is None else tuple(self.roles[j] for j in keep),
        )

    def to_frame(self, treatment_col: str = "a", outcome_col: str = "y") -> pd.DataFrame:
        frame = pd.DataFrame(self.x, columns=list(self.names))
        frame[treatment_col] = self.a.astype(int)
        frame[outcome_col] = self.y
        return frame


@total_ordering
@dataclass(frozen=True)
class CoalitionMask:
    """A subset S of the covariates ``0..width-1`` stored as an integer bitset.

    Bit ``j`` set means covariate ``j`` belongs to S. Masks order
    lexicographically on ``(bit_0, bit_1, ...)``.

    >>> mask = CoalitionMask.from_indices([0, 2], width=3)
    >>> mask.indices, len(mask), mask.complement().indices
    ((0, 2), 2, (1,))
    """

    bits: int
    width: int

    def __post_init__(self):
        if self.width < 0:
            raise WidthMismatch(f"Mask width must be non-negative, got {self.width}.")
        if not 0 <= self.bits < (1 << self.width):
            raise WidthMismatch(f"Bits {self.bits:#x} do not fit in width {self.width}.")

    @classmethod
    def empty(cls, width: int) -> "CoalitionMask":
        return cls(0, width)

    @classmethod
    def full(cls, width: int) -> "CoalitionMask":
        return cls((1 << width) - 1, width)

    @classmethod
    def from_indices(cls, indices: Iterable[int], width: int) -> "CoalitionMask":
        bits = 0
        for j in indices:
            if not 0 <= j < width:
                raise WidthMismatch(f"Covariate index {j} outside width {width}.")
            bits |= 1 << int(j)
        return cls(bits, width)

    @classmethod
    def from_array(cls, members: Union[np.ndarray, Sequence[bool]]) -> "CoalitionMask":
        members = np.asarray(members, dtype=bool)
        return cls.from_indices(np.flatnonzero(members).tolist(), width=len(members))

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(j for j in range(self.width) if self.bits >> j & 1)

    def to_array(self) -> np.ndarray:
        return np.array([self.bits >> j & 1 for j in range(self.width)], dtype=bool)

    def complement(self) -> "CoalitionMask":
        return CoalitionMask(~self.bits & ((1 << self.width) - 1), self.width)

    def with_member(self, j: int) -> "CoalitionMask":
        return CoalitionMask(self.bits | (1 << j), self.width)

    def without_member(self, j: int) -> "CoalitionMask":
        return CoalitionMask(self.bits & ~(1 << j), self.width)

    @property
    def hex(self) -> str:
        return f"{self.bits:#x}"

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __contains__(self, j: int) -> bool:
        return bool(0 <= j < self.width and self.bits >> j & 1)

    def _key(self) -> Tuple[int, ...]:
        return tuple(self.bits >> j & 1 for j in range(self.width))

    def __lt__(self, other: "CoalitionMask") -> bool:
        if not isinstance(other, CoalitionMask):
            return NotImplemented
        return (self.width, self._key()) < (other.width, other._key())


def subset_columns(ds: Union[Dataset, np.ndarray], mask: CoalitionMask) -> np.ndarray:
    """Extract :math:`X_S`, columns in ascending covariate order.

    Args:
        ds: A dataset or a covariate matrix
        mask: Coalition whose width must equal the number of covariates

    Raises:
        WidthMismatch: If ``mask.width`` differs from the number of covariates
    """
    x = ds.x if isinstance(ds, Dataset) else np.asarray(ds)
    if mask.width != x.shape[1]:
        raise WidthMismatch(f"Mask width {mask.width} does not match p={x.shape[1]}.")
    return x[:, list(mask.indices)]


def standardize(ds: Dataset, continuous_only: bool = False) -> Dataset:
    """Center and scale covariate columns to mean 0 and sd 1.

    Constant columns are only centered. With ``continuous_only``,
    columns with at most two distinct values are left untouched.
    """
    x = np.array(ds.x)
    for j in range(ds.p):
        column = x[:, j]
        if continuous_only and len(np.unique(column)) <= 2:
            continue
        sd = column.std()
        x[:, j] = (column - column.mean()) / (sd if sd > 0 else 1.0)
    return replace(ds, x=x)


def impute_median(frame: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    """Fill missing cells of ``columns`` with the column median."""
    frame = frame.copy()
    for col in columns:
        numeric = pd.to_numeric(frame[col], errors="coerce")
        n_missing = int(numeric.isna().sum())
        if n_missing:
            logger.info(f"Imputing {n_missing} missing value(s) in {col!r} with the median")
        frame[col] = numeric.fillna(numeric.median())
    return frame


def _to_numeric(frame: pd.DataFrame, col: str) -> np.ndarray:
    numeric = pd.to_numeric(frame[col].replace("", np.nan), errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise NonNumericCell(row=row + 1, col=col, value=frame[col].iloc[row])
    return numeric.to_numpy(dtype=np.float64)


def load_csv(
    path: Union[str, Path],
    treatment_col: str,
    outcome_col: str,
    roles_path: Optional[Union[str, Path]] = None,
    impute: Optional[ImputeStrategy] = None,
) -> Dataset:
    """Read a dataset from a UTF-8, comma-separated file with a header row.

    Covariates are every column other than the treatment and outcome columns,
    in header order. Rows with missing cells are rejected unless ``impute`` is set,
    in which case missing covariate cells are filled before validation.

    Args:
        path: CSV file
        treatment_col: Name of the binary treatment column
        outcome_col: Name of the outcome column
        roles_path: Optional sidecar CSV with columns ``name,role``
        impute: Optional preprocessing of missing covariate cells

    Raises:
        FileNotFoundError: If ``path`` does not exist
        MissingColumn: If the treatment or outcome column is absent
        NonNumericCell: On the first non-numeric or missing cell
        NonBinaryTreatment: If treatment takes values other than 0 and 1
        EmptyArm: If one treatment arm has no rows
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset {path.as_posix()} does not exist.")
    if treatment_col == outcome_col:
        raise InvalidDataset("Treatment and outcome columns must be distinct.")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [c.strip() for c in frame.columns]
    for col in (treatment_col, outcome_col):
        if col not in frame.columns:
            raise MissingColumn(col)
    covariates = [c for c in frame.columns if c not in (treatment_col, outcome_col)]

    if impute == "median":
        frame = impute_median(frame.replace("", np.nan), covariates)
    elif impute is not None:
        raise ValueError(f'"{impute}" is not a valid imputation strategy.')

    x = (
        np.column_stack([_to_numeric(frame, c) for c in covariates])
        if covariates
        else np.empty((len(frame), 0))
    )
    a = _to_numeric(frame, treatment_col)
    y = _to_numeric(frame, outcome_col)

    roles = read_roles(roles_path, covariates) if roles_path is not None else None
    ds = Dataset(x=x, a=a, y=y, names=tuple(covariates), roles=roles)
    logger.info(f"Loaded {path.name}: n={ds.n}, p={ds.p}, arms={ds.arm_sizes}")
    return ds


def read_roles(path: Union[str, Path], names: Sequence[str]) -> Tuple[CovariateRole, ...]:
    """Read a ``name,role`` sidecar; covariates it does not list are ``Unknown``."""
    table = pd.read_csv(path, dtype=str)
    for col in ("name", "role"):
        if col not in table.columns:
            raise MissingColumn(col)
    mapping = dict(zip(table["name"].str.strip(), table["role"].str.strip()))
    return tuple(CovariateRole(mapping.get(name, CovariateRole.UNKNOWN.value)) for name in names)


def write_csv(ds: Dataset, path: Union[str, Path], treatment_col: str = "a", outcome_col: str = "y") -> None:
    ds.to_frame(treatment_col, outcome_col).to_csv(path, index=False, float_format="%.17g")


def write_roles(ds: Dataset, path: Union[str, Path]) -> None:
    roles = ds.roles or tuple(CovariateRole.UNKNOWN for _ in ds.names)
    pd.DataFrame({"name": list(ds.names), "role": [r.value for r in roles]}).to_csv(
        path, index=False
    )
