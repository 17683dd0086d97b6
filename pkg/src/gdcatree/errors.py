"""Exception hierarchy shared by all gdcatree modules."""


class GDCAError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GDCAError, ValueError):
    """An argument lies outside the domain of a function."""


class ParseError(GDCAError, ValueError):
    """A data or trace file could not be parsed."""


class FormatError(ParseError):
    """A trace CSV is missing columns or holds non-numeric values."""


class MapError(GDCAError, KeyError):
    """A label has no entry in the label map."""


class DataIOError(GDCAError, OSError):
    """A data file is missing, unreadable or empty."""


class ConfigError(GDCAError, ValueError):
    """Invalid experiment, topology or schedule configuration."""


class UnknownNode(GDCAError, KeyError):
    """A node id is not part of the topology."""


class EmptyNode(GDCAError, ValueError):
    """A node has no data, so data-proportional weights are undefined."""


class ConvergenceError(GDCAError, RuntimeError):
    """An iterative method hit its iteration cap."""


class Unsupported(GDCAError, NotImplementedError):
    """The operation is not available for the given loss family."""
