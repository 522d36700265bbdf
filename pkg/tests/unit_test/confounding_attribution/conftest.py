from fractions import Fraction

import numpy as np
import pytest

from confounding_attribution.data import Dataset
from confounding_attribution.oracle import CANCELLATION_EXAMPLE, to_dataset
from confounding_attribution.type import CovariateRole

# Smallest sample size that splits every cancellation cell into whole arm counts
CANCELLATION_N = 120

PHI_CANCELLATION = float(
    Fraction(1, 2) * (Fraction(-2233, 23370) + Fraction(9775, 29328))
)


@pytest.fixture(scope="session")
def cancellation_ds() -> Dataset:
    return to_dataset(
        CANCELLATION_EXAMPLE,
        CANCELLATION_N,
        roles=(CovariateRole.CONFOUNDER, CovariateRole.CONFOUNDER),
    )


@pytest.fixture
def small_ds() -> Dataset:
    x = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    return Dataset(
        x=x,
        a=np.array([0, 1, 0, 1]),
        y=np.array([1.0, 2.0, 3.0, 4.0]),
        names=("x1", "x2"),
    )


@pytest.fixture(scope="session")
def phi_cancellation() -> float:
    """Shapley value of the first covariate in the cancellation game; the second is its negative."""
    return PHI_CANCELLATION
