"""Exception types raised by tomkit operations.

Validation problems with user-supplied arguments raise plain ``ValueError``;
the classes below mark failures of the data itself (degenerate images,
undersized masks, malformed files, codec subprocess failures).
"""


class TomkitError(Exception):
    """Base class for tomkit processing errors."""


class FileFormatError(TomkitError):
    """A file on disk does not conform to its declared format."""


class DegenerateImageError(TomkitError):
    """Image content makes the requested operation undefined (e.g. all-zero)."""


class DegenerateInputError(TomkitError):
    """Numeric input has no spread where spread is required (constant field)."""


class InsufficientSamplesError(TomkitError):
    """Too few samples selected by a mask for the estimator to be defined."""


class InsufficientMaskError(TomkitError):
    """A region mask selects fewer pixels than the configured minimum."""


class EmptyRegionError(TomkitError):
    """An evaluation region contains no usable pixels."""


class CodecError(TomkitError):
    """An external codec invocation failed or produced malformed output."""
