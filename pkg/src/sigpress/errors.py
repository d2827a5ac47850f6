"""Error types raised on malformed inputs and damaged archives."""


class SigpressError(Exception):
    """Base class for data errors this package raises deliberately."""


class FastqParseError(SigpressError):
    """Input text is not well-formed FASTQ."""


class CorruptArchiveError(SigpressError):
    """A binned stage file or final archive fails validation."""
