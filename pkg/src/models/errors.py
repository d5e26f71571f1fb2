"""
Exception hierarchy for the rough filament simulator.

Every numerical failure raised by a service derives from FilamentError and
carries the name of the check that failed, so the command line can report it.
"""

from typing import Optional


class FilamentError(Exception):
    """Base class for all simulator errors."""

    default_check = "filament"

    def __init__(self, message: str, check: Optional[str] = None):
        super().__init__(message)
        self.check = check or self.default_check


class ConfigError(FilamentError, ValueError):
    """Scenario or environment configuration is invalid."""

    default_check = "config"


class NotExact(FilamentError):
    """Three-parameter input to the sewing map is not in the image of delta2."""

    default_check = "sewing"


class ExponentOutOfRange(FilamentError):
    """Hölder exponent outside the range an operation is defined for."""

    default_check = "sewing"


class DegenerateCurve(FilamentError):
    """Curve has a zero-length segment where a reciprocal is required."""

    default_check = "rough_path"


class GridMismatch(FilamentError):
    """Arrays are not defined on the same circle grid."""

    default_check = "rough_path"


class BaseMismatch(FilamentError):
    """Controlled curves are controlled by different rough paths."""

    default_check = "rough_integral"


class ExponentTooLow(FilamentError):
    """Exponent too low for the requested integral (3nu <= 1 or nu <= 1/2)."""

    default_check = "rough_integral"


class InsufficientSmoothness(FilamentError):
    """Map or kernel does not provide enough derivatives."""

    default_check = "smoothness"


class OrderUnsupported(FilamentError):
    """Kernel derivative order above what the kernel provides."""

    default_check = "kernel"


class QuadratureFailure(FilamentError):
    """Quadrature or extrapolation did not stabilize."""

    default_check = "quadrature"


class StepRejected(FilamentError):
    """Time step produced non-finite state or norms."""

    default_check = "evolution"


class BlowUpSuspected(FilamentError):
    """Gubinelli derivative grew past the blow-up guard."""

    default_check = "evolution"
