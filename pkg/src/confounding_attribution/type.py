from enum import Enum
from typing import Literal, NewType

CovariateName = NewType("CovariateName", str)
Seed = NewType("Seed", int)

ValueMode = Literal["signed", "absolute", "squared"]
VALUE_MODES = {"signed", "absolute", "squared"}


class CovariateRole(str, Enum):
    """Ground-truth role of a covariate in a data-generating process.

    Roles are metadata: only data generators and evaluation metrics read them.
    """

    INSTRUMENT = "Instrument"
    CONFOUNDER = "Confounder"
    EFFECT_MODIFIER = "EffectModifier"
    OUTCOME_ONLY = "OutcomeOnly"
    NOISE = "Noise"
    UNKNOWN = "Unknown"


class Method(str, Enum):
    EXACT = "exact"
    MSR = "msr"
    KERNELSHAP = "kernelshap"
    REGRESSION_MSR = "regression_msr"
