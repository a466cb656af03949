"""Maximum queue length in closed hub-and-spoke networks: exact laws,
limit constants and stochastic simulation."""

from .errors import (
    ClosedMaxError,
    ComputationTooLarge,
    DegenerateGroup,
    DimensionTooLarge,
    InvalidSpec,
    NearCritical,
    NoAdmissibleRoot,
    NoSignChange,
    NumericError,
    OverflowGuard,
    StateSpaceTooLarge,
)
from .model import Grouped, Homogeneous, Limits, NetworkSpec, Rates, Regime, RegimeReport, classify, validate

__version__ = "0.1.0"

__all__ = [
    "ClosedMaxError",
    "ComputationTooLarge",
    "DegenerateGroup",
    "DimensionTooLarge",
    "InvalidSpec",
    "NearCritical",
    "NoAdmissibleRoot",
    "NoSignChange",
    "NumericError",
    "OverflowGuard",
    "StateSpaceTooLarge",
    "Grouped",
    "Homogeneous",
    "Limits",
    "NetworkSpec",
    "Rates",
    "Regime",
    "RegimeReport",
    "classify",
    "validate",
]
