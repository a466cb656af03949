"""Exception and warning types shared across the package."""


class ClosedMaxError(Exception):
    """Base class for all package errors."""


class InvalidSpec(ClosedMaxError, ValueError):
    """Raised when a network description fails validation.

    ``problems`` holds one ``(field, message)`` pair per failed check.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("spec", problems)]
        self.problems = list(problems)
        super().__init__("; ".join(f"{f}: {msg}" for f, msg in self.problems))


class NumericError(ClosedMaxError, ArithmeticError):
    """Base class for numerical failures (CLI exit code 2)."""


class NoAdmissibleRoot(NumericError):
    pass


class NoSignChange(NumericError):
    pass


class NearCritical(NumericError):
    """No limit theorem applies to the requested parameters."""


class DegenerateGroup(NumericError):
    pass


class OverflowGuard(NumericError):
    pass


class ComputationTooLarge(NumericError):
    """The exact computation would exceed its work budget."""


class DimensionTooLarge(ComputationTooLarge):
    pass


class StateSpaceTooLarge(ComputationTooLarge):
    pass


class UnboundedSupremumWarning(RuntimeWarning):
    """The Legendre-Fenchel maximizer sits on the end of the search interval."""


class ScaleSeparationWarning(UserWarning):
    pass
