"""Exception types raised across the toolkit.

All of these derive from ValueError so callers that only care about
"bad input" can catch one base class.
"""


class ParameterError(ValueError):
    """An argument is outside its documented domain (unknown corruption
    kind, severity not in 1..5, malformed threshold, and so on)."""


class ParseError(ValueError):
    """A text file (annotation, detection, manifest, matrix CSV) does not
    match the expected line grammar.  Carries file and line context in
    the message."""


class DecodeError(ValueError):
    """An image file could not be decoded, or an array is not a valid
    8-bit RGB raster."""


class EmptyCloudError(ValueError):
    """A cloud source contains no pixel above the extraction threshold in
    any channel, so compensation is undefined."""


class IncompleteMatrixError(ValueError):
    """A corruption/severity result grid is missing cells required by the
    requested summary statistic."""


class ConfigurationError(ValueError):
    """A config file or CLI flag combination is invalid or inconsistent
    with the data on disk."""
