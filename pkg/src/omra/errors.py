"""Exception types shared across the codec."""


class OmraError(Exception):
    """Base class for codec errors."""


class DataError(OmraError):
    """Input data is missing, truncated, or dimensionally inconsistent."""


class BitstreamError(OmraError):
    """A bitstream is malformed, truncated, or internally inconsistent."""
