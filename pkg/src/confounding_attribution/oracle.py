"""Exact-rational population oracles for finite discrete data-generating processes.

Everything here works on :class:`fractions.Fraction`; conversion to float only
happens when an oracle table is expanded into a :class:`Dataset`.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from confounding_attribution.data import CoalitionMask, Dataset
from confounding_attribution.exceptions import (
    DegenerateArm,
    DimensionTooLarge,
    IncompleteTable,
    InvalidSpec,
    ZeroMassSubgroup,
)
from confounding_attribution.type import CovariateRole

logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_PLAYERS = 12

Rational = Union[Fraction, int, str]


def _q(value: Rational) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True)
class Cell:
    """One support point ``x`` of the covariates with its mass, propensity and arm means."""

    x: Tuple[int, ...]
    prob: Fraction
    pi: Fraction
    mu0: Fraction
    mu1: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(int(v) for v in self.x))
        for attr in ("prob", "pi", "mu0", "mu1"):
            object.__setattr__(self, attr, _q(getattr(self, attr)))

    @property
    def tau(self) -> Fraction:
        return self.mu1 - self.mu0


@dataclass(frozen=True)
class DiscreteJoint:
    """A finite joint law of ``(X, A, Y)`` given cell by cell.

    Cell masses sum to exactly one and every propensity lies strictly in (0, 1).
    """

    cells: Tuple[Cell, ...]

    def __post_init__(self):
        cells = tuple(self.cells)
        if not cells:
            raise InvalidSpec("cells", "at least one cell is required")
        widths = {len(cell.x) for cell in cells}
        if len(widths) != 1:
            raise InvalidSpec("cells", f"cells have inconsistent widths {sorted(widths)}")
        if len({cell.x for cell in cells}) != len(cells):
            raise InvalidSpec("cells", "cell covariate values must be unique")
        if any(cell.prob < 0 for cell in cells):
            raise InvalidSpec("prob", "cell masses must be non-negative")
        total = sum((cell.prob for cell in cells), Fraction(0))
        if total != 1:
            raise InvalidSpec("prob", f"cell masses sum to {total}, not 1")
        if any(not 0 < cell.pi < 1 for cell in cells):
            raise InvalidSpec("pi", "every propensity must lie strictly between 0 and 1")
        object.__setattr__(self, "cells", cells)

    @property
    def p(self) -> int:
        return len(self.cells[0].x)


# Both binary confounders push the crude contrast in opposite directions and
# cancel exactly; the treatment effect is zero in every cell.
CANCELLATION_EXAMPLE = DiscreteJoint(
    cells=(
        Cell((0, 0), Fraction(1, 4), Fraction(1, 3), Fraction(0), Fraction(0)),
        Cell((0, 1), Fraction(1, 4), Fraction(3, 10), Fraction(-3, 2), Fraction(-3, 2)),
        Cell((1, 0), Fraction(1, 4), Fraction(1, 10), Fraction(-4, 3), Fraction(-4, 3)),
        Cell((1, 1), Fraction(1, 4), Fraction(9, 10), Fraction(-7, 6), Fraction(-7, 6)),
    )
)


def _subgroup(dist: DiscreteJoint, mask: CoalitionMask, x_s: Sequence[int]) -> List[Cell]:
    if mask.width != dist.p:
        raise InvalidSpec("mask", f"width {mask.width} does not match p={dist.p}")
    indices = mask.indices
    x_s = tuple(int(v) for v in x_s)
    if len(x_s) != len(indices):
        raise InvalidSpec("x_s", f"expected {len(indices)} value(s), got {len(x_s)}")
    cells = [cell for cell in dist.cells if tuple(cell.x[j] for j in indices) == x_s]
    if sum((cell.prob for cell in cells), Fraction(0)) == 0:
        raise ZeroMassSubgroup(f"X_S={x_s} for S={indices} has zero probability.")
    return cells


def subgroups(dist: DiscreteJoint, mask: CoalitionMask) -> Dict[Tuple[int, ...], Fraction]:
    """Realizable values of ``X_S`` (sorted) mapped to their probability."""
    masses: Dict[Tuple[int, ...], Fraction] = {}
    for cell in dist.cells:
        key = tuple(cell.x[j] for j in mask.indices)
        masses[key] = masses.get(key, Fraction(0)) + cell.prob
    return {key: masses[key] for key in sorted(masses) if masses[key] > 0}


def arm_means(
    dist: DiscreteJoint, mask: Optional[CoalitionMask] = None, x_s: Sequence[int] = ()
) -> Tuple[Fraction, Fraction]:
    """``(E[Y | A=1, X_S=x_s], E[Y | A=0, X_S=x_s])``; the default mask is the empty coalition.

    >>> arm_means(CANCELLATION_EXAMPLE)
    (Fraction(-1, 1), Fraction(-1, 1))
    """
    mask = CoalitionMask.empty(dist.p) if mask is None else mask
    cells = _subgroup(dist, mask, x_s)
    treated_mass = sum((c.prob * c.pi for c in cells), Fraction(0))
    untreated_mass = sum((c.prob * (1 - c.pi) for c in cells), Fraction(0))
    treated = sum((c.prob * c.pi * c.mu1 for c in cells), Fraction(0)) / treated_mass
    untreated = sum((c.prob * (1 - c.pi) * c.mu0 for c in cells), Fraction(0)) / untreated_mass
    return treated, untreated


def population_bias(dist: DiscreteJoint, mask: CoalitionMask, x_s: Sequence[int]) -> Fraction:
    """Residual confounding bias ``delta_S(x_S) - tau_S(x_S)`` in exact arithmetic.

    >>> population_bias(CANCELLATION_EXAMPLE, CoalitionMask.from_indices([0], 2), (0,))
    Fraction(45, 779)

    Raises:
        ZeroMassSubgroup: If ``X_S = x_s`` has probability zero
    """
    cells = _subgroup(dist, mask, x_s)
    treated, untreated = arm_means(dist, mask, x_s)
    mass = sum((c.prob for c in cells), Fraction(0))
    tau_s = sum((c.prob * c.tau for c in cells), Fraction(0)) / mass
    return treated - untreated - tau_s


def population_value(dist: DiscreteJoint, mask: CoalitionMask) -> Fraction:
    """The global coalition value ``-E[b_S(X_S)]``."""
    return -sum(
        (mass * population_bias(dist, mask, x_s) for x_s, mass in subgroups(dist, mask).items()),
        Fraction(0),
    )


def covariance_identity(
    dist: DiscreteJoint, mask: CoalitionMask, x_s: Sequence[int]
) -> Tuple[Fraction, Fraction]:
    """Return ``(b_S(x_S), Cov(pi, mu1 | x_S) / e_S + Cov(pi, mu0 | x_S) / (1 - e_S))``.

    The two sides are equal for every discrete law.

    Raises:
        ZeroMassSubgroup: If ``X_S = x_s`` has probability zero
        DegenerateArm: If the subgroup propensity ``e_S`` is 0 or 1
    """
    cells = _subgroup(dist, mask, x_s)
    mass = sum((c.prob for c in cells), Fraction(0))

    def expect(values: Sequence[Fraction]) -> Fraction:
        return sum((c.prob * v for c, v in zip(cells, values)), Fraction(0)) / mass

    pi = [c.pi for c in cells]
    e_s = expect(pi)
    if e_s in (0, 1):
        raise DegenerateArm(f"Subgroup propensity is {e_s} for X_S={tuple(x_s)}.")

    def cov(values: Sequence[Fraction]) -> Fraction:
        return expect([a * b for a, b in zip(pi, values)]) - e_s * expect(values)

    rhs = cov([c.mu1 for c in cells]) / e_s + cov([c.mu0 for c in cells]) / (1 - e_s)
    return population_bias(dist, mask, x_s), rhs


def population_game(dist: DiscreteJoint) -> Dict[CoalitionMask, Fraction]:
    """Exact global values of every coalition."""
    return {
        CoalitionMask(bits, dist.p): population_value(dist, CoalitionMask(bits, dist.p))
        for bits in range(1 << dist.p)
    }


def brute_force_shapley(
    values: Mapping[Union[CoalitionMask, int], Rational], p: int
) -> Tuple[Fraction, ...]:
    """Shapley values by averaging marginal contributions over all ``p!`` orderings.

    Args:
        values: Value of every coalition, keyed by mask or by its integer bits
        p: Number of players

    Raises:
        IncompleteTable: If a coalition value is missing
        DimensionTooLarge: If ``p`` exceeds ``MAX_BRUTE_FORCE_PLAYERS``
    """
    if p > MAX_BRUTE_FORCE_PLAYERS:
        raise DimensionTooLarge(f"Permutation enumeration needs p <= {MAX_BRUTE_FORCE_PLAYERS}, got {p}.")
    table = {(k.bits if isinstance(k, CoalitionMask) else int(k)): _q(v) for k, v in values.items()}
    missing = [bits for bits in range(1 << p) if bits not in table]
    if missing:
        raise IncompleteTable(f"{len(missing)} of {1 << p} coalition values missing (e.g. {missing[0]:#x}).")

    totals = [Fraction(0)] * p
    for order in itertools.permutations(range(p)):
        bits = 0
        for j in order:
            totals[j] += table[bits | 1 << j] - table[bits]
            bits |= 1 << j
    n_orders = math.factorial(p)
    return tuple(total / n_orders for total in totals)


def to_dataset(
    dist: DiscreteJoint, n: int, roles: Optional[Sequence[CovariateRole]] = None
) -> Dataset:
    """Expand ``dist`` into a noiseless dataset with exact cell and arm proportions.

    Every cell gets ``n * prob`` rows of which ``n * prob * pi`` are treated;
    outcomes equal the arm means.

    Raises:
        InvalidSpec: If some cell or arm count is not an integer
    """
    rows: List[Tuple[Tuple[int, ...], int, Fraction, Fraction, Fraction]] = []
    for cell in dist.cells:
        count = n * cell.prob
        n_treated = count * cell.pi
        if count.denominator != 1 or n_treated.denominator != 1:
            raise InvalidSpec("n", f"n={n} does not split cell {cell.x} into whole treated/untreated rows")
        for _ in range(int(n_treated)):
            rows.append((cell.x, 1, cell.mu1, cell.tau, cell.pi))
        for _ in range(int(count - n_treated)):
            rows.append((cell.x, 0, cell.mu0, cell.tau, cell.pi))

    return Dataset(
        x=np.array([row[0] for row in rows], dtype=np.float64),
        a=np.array([row[1] for row in rows], dtype=np.float64),
        y=np.array([float(row[2]) for row in rows]),
        names=tuple(f"x{j + 1}" for j in range(dist.p)),
        roles=None if roles is None else tuple(roles),
        tau_true=np.array([float(row[3]) for row in rows]),
        propensity=np.array([float(row[4]) for row in rows]),
    )


def discrete_joint_to_dict(dist: DiscreteJoint) -> Dict[str, Any]:
    return {
        "cells": [
            {
                "x": list(cell.x),
                "prob": str(cell.prob),
                "pi": str(cell.pi),
                "mu0": str(cell.mu0),
                "mu1": str(cell.mu1),
            }
            for cell in dist.cells
        ]
    }


def discrete_joint_from_dict(block: Mapping[str, Any]) -> DiscreteJoint:
    try:
        return DiscreteJoint(
            cells=tuple(
                Cell(
                    x=tuple(cell["x"]),
                    prob=Fraction(str(cell["prob"])),
                    pi=Fraction(str(cell["pi"])),
                    mu0=Fraction(str(cell["mu0"])),
                    mu1=Fraction(str(cell["mu1"])),
                )
                for cell in block["cells"]
            )
        )
    except (KeyError, ValueError, ZeroDivisionError) as e:
        if isinstance(e, InvalidSpec):
            raise
        raise InvalidSpec("cells", f"malformed oracle table ({e!r})") from e


def load_discrete_joint(path: Union[str, Path]) -> DiscreteJoint:
    """Load a table of rational strings such as ``{"cells": [{"x": [0, 1], "prob": "1/4", ...}]}``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Oracle table {path.as_posix()} does not exist.")
    with open(path, encoding="utf-8") as f:
        return discrete_joint_from_dict(json.load(f))
