"""
Exception hierarchy for holocenter.

Every analysis failure raised by the engines derives from HolocenterError so
the harness can map it to an exit status in one place. Input problems
(InvalidInputError, ParseError) map to status 2, everything else to status 1.
"""


class HolocenterError(Exception):
    """Base class for all holocenter errors."""


class InvalidInputError(HolocenterError, ValueError):
    """Arguments violate an operation's preconditions."""


class ParseError(HolocenterError, ValueError):
    """
    A field or scenario document could not be parsed.

    Attributes:
        location: JSON-pointer style path to the offending element.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        self.message = message
        super().__init__(f"{location}: {message}" if location else message)


class SingularSystemError(HolocenterError):
    """Linear system is singular or too ill-conditioned to solve."""


class BlowupError(HolocenterError):
    """Trajectory left the trust ball."""


class StepLimitError(HolocenterError):
    """Integrator exhausted its step budget."""


class BoundaryAmbiguityError(HolocenterError):
    """A root lies within separation tolerance of the region boundary."""


class NonIsolatedError(HolocenterError):
    """The iterate is the identity on the region; the fixed point is not isolated."""


class NonIsolatedOrCapExceededError(HolocenterError):
    """All truncated-series coefficients vanish up to the degree cap."""


class UndeterminedError(HolocenterError):
    """Independent retries of a root search disagreed."""


class DiskNotFoundError(HolocenterError):
    """Newton failed while solving for the periodic disk."""


class InconsistentDiskError(HolocenterError):
    """The first-coordinate identity of the disk is violated."""


class PreconditionFailedError(HolocenterError):
    """A checked precondition does not hold."""
