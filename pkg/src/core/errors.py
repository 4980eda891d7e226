"""
Exception hierarchy for atomchip

Every error carries the exit code the CLI returns for it:
1 for unreadable input, 2 for invalid input, 3 for runtime failures.
"""

from typing import Optional, Sequence


class AtomChipError(Exception):
    """Base class for all atomchip errors"""
    exit_code = 3


# -- parse family (exit 1)

class ParseError(AtomChipError):
    exit_code = 1


class LayoutSyntaxError(ParseError):
    """Malformed layout or schedule document"""


class UnitError(ParseError):
    """Missing or unknown unit tag"""


class FormatVersionError(ParseError):
    """Document declares a format major version this reader does not know"""


class ConfigError(ParseError):
    """Unreadable configuration file or unusable setting"""


# -- validation family (exit 2)

class ValidationError(AtomChipError):
    exit_code = 2


class InvalidParams(ValidationError):
    """Builder or checker called with inconsistent parameters"""


class FieldZeroRisk(ValidationError):
    """Opposed center current too strong: the trap minimum may touch zero"""


class DegenerateSegment(ValidationError):
    """Conductor segment with coincident end points"""


class ScheduleRangeError(ValidationError):
    """Schedule evaluated outside its closed interval [0, T]"""


# -- runtime family (exit 3)

class FieldSingularity(AtomChipError):
    """Evaluation point lies on (or within 1 nm of) a current filament"""

    def __init__(self, message: str, element: Optional[str] = None):
        super().__init__(message)
        self.element = element


class ZeroFieldRegion(AtomChipError):
    """|B| too small for the Hessian of |B| to exist"""


class NoConvergence(AtomChipError):
    pass


class EscapedDomain(AtomChipError):
    """Iterate left the sanity box around its start"""


class SliceLost(AtomChipError):
    """Continuation of transverse minima failed"""

    def __init__(self, message: str, last_good_x: Optional[float] = None):
        super().__init__(message)
        self.last_good_x = last_good_x


class NoGuide(AtomChipError):
    """Layout has no guide wire with a transverse field zero"""


class StepTooLarge(AtomChipError):
    pass


class EmptyCloud(AtomChipError):
    pass


def exit_code_for(error: BaseException, default: int = 3) -> int:
    """Map an exception onto the CLI exit code"""
    if isinstance(error, AtomChipError):
        return error.exit_code
    if isinstance(error, (FileNotFoundError, IsADirectoryError)):
        return 1
    return default


__all__: Sequence[str] = [
    'AtomChipError', 'ParseError', 'LayoutSyntaxError', 'UnitError', 'FormatVersionError', 'ConfigError',
    'ValidationError', 'InvalidParams', 'FieldZeroRisk', 'DegenerateSegment',
    'ScheduleRangeError', 'FieldSingularity', 'ZeroFieldRegion', 'NoConvergence',
    'EscapedDomain', 'SliceLost', 'NoGuide', 'StepTooLarge', 'EmptyCloud', 'exit_code_for',
]
