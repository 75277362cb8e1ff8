"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input data (shapes, dimensions, non-finite values)."""


class ParameterError(ValueError):
    """A model or algorithm parameter is outside its admissible range."""


class EmptySegmentError(InputError):
    """An operation that needs at least one pixel was given an empty segment."""


class PreconditionError(ValueError):
    """Input violates a structural precondition (e.g. an image that should be degenerate is not)."""


class FormatError(InputError):
    """A file could not be parsed; the message names the offending field or byte offset."""
