"""Exception hierarchy shared across the toolkit.

``FormatError`` covers everything that goes wrong while parsing bytes
(container files, bitstreams, PPM streams).  Codec failures get their own
branch so the CLI can map them to a distinct exit code.
"""


class TaccompressError(Exception):
    """Base class for all toolkit-specific errors."""


class FormatError(TaccompressError, ValueError):
    """A byte stream does not conform to the expected on-disk format."""


class CodecError(TaccompressError):
    """Base class for compression/decompression failures."""


class CodecIntegrityError(CodecError):
    """A codec produced a reconstruction that fails verification."""


class CodecUnavailableError(CodecError):
    """An external codec executable is missing or unusable."""


class CodecRunError(CodecError):
    """An external codec process failed (nonzero exit, timeout, bad output)."""
