"""Exception hierarchy.

Errors split into two families so the command line can map them onto exit
codes: :class:`InputError` (bad arguments or files, exit 2) and
:class:`NumericalError` (inputs that parse but carry no usable signal, exit 3).
"""


class EpsStarError(Exception):
    """Base class for all errors raised by this package."""


class InputError(EpsStarError, ValueError):
    """The caller supplied an invalid argument or malformed data."""


class NumericalError(EpsStarError, ArithmeticError):
    """The data is well-formed but degenerate for the requested computation."""


class DomainError(InputError):
    """A scalar argument lies outside its mathematical domain."""


class ShapeError(InputError):
    """Array lengths or dimensions do not agree."""


class ParseError(InputError):
    """A loss file, manifest or config could not be parsed."""


class UnknownFormatError(InputError):
    """An output format name is not recognised."""


class EmptySampleError(InputError):
    """A sample that must be non-empty is empty."""


class InsufficientDataError(InputError):
    """Not enough data points to perform the requested partition or fit."""


class DegenerateLossesError(NumericalError):
    """All losses are identical, so there is no distribution to fit."""


class DegenerateSampleError(NumericalError):
    """A sample has zero spread (or a fitted component collapsed)."""


class EmptyCurveError(NumericalError):
    """No (FPR, FNR) pairs survive clamping."""


class EmptyEnsembleError(NumericalError):
    """An ensemble contains no model instances."""
