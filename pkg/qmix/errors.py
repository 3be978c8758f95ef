"""Exception hierarchy for qmix. Each kind also derives from the closest builtin."""
from typing import Optional


class QmixError(Exception):
    """Base class for every error raised by qmix."""


class NumericalFailure(QmixError, ArithmeticError):
    pass


class SizeError(QmixError, ValueError):
    pass


class ArgumentError(QmixError, ValueError):
    pass


class ModelInconsistencyError(QmixError, ValueError):
    pass


class SingularModelError(QmixError, ArithmeticError):
    pass


class RankDeficiencyError(QmixError, ArithmeticError):
    pass


class IrregularOutcomeError(QmixError, ValueError):
    pass


class NoInformationError(QmixError, ValueError):
    pass


class PreconditionError(QmixError, ValueError):
    pass


class InternalConsistencyError(QmixError, RuntimeError):
    pass


class DegenerateModelError(QmixError, ValueError):
    pass


class PriorError(QmixError, ValueError):
    pass


class MixtureFileError(QmixError, ValueError):
    """Raised while reading a mixture or POVM file; carries the file and field path."""

    def __init__(self, message: str, path: Optional[str] = None, field: Optional[str] = None):
        self.path = path
        self.field = field
        where = ':'.join(x for x in (path, field) if x)
        super().__init__(f'{where}: {message}' if where else message)
