"""Exception hierarchy shared by all freecur modules.

Exit-code mapping used by the CLI: FormatError -> 2 (usage),
ResourceLimit / SearchBoundExceeded -> 4, everything else -> 3.
"""


class FreecurError(Exception):
    """Base class for all package errors."""


class FormatError(FreecurError):
    """Malformed text input (words, tables, graph files, CLI arguments)."""


class UnknownLetter(FreecurError):
    """A symbol outside the basis alphabet."""


class EmptyPattern(FreecurError):
    """Occurrence counting requires a nonempty pattern."""


class NotAnAutomorphism(FreecurError):
    """The given basis images do not generate the free group."""


class ResourceLimit(FreecurError):
    """A configured enumeration cap was exceeded."""


class SearchBoundExceeded(FreecurError):
    """Exhaustive certification failed within the configured bound.

    Carries the best lower bound found so far in ``lower_bound``.
    """

    def __init__(self, message, lower_bound=None):
        super().__init__(message)
        self.lower_bound = lower_bound


class InvalidTable(FreecurError):
    """A frequency table violates its consistency laws."""


class OutsideSupport(FreecurError):
    """Restriction applied to a current not supported on the subgroup.

    ``terms`` lists the offending cyclic words.
    """

    def __init__(self, message, terms=()):
        super().__init__(message)
        self.terms = tuple(terms)


class NotRealizable(FreecurError):
    """The support multigraph of a table is disconnected.

    ``components`` holds the node sets found, for diagnosis.
    """

    def __init__(self, message, components=()):
        super().__init__(message)
        self.components = tuple(components)


class UnsupportedChart(FreecurError):
    """Tree/current pair not supported by the exact pairing formulas."""


class NotTransverse(FreecurError):
    """Two splittings share a nontrivial elliptic element.

    ``pair`` identifies the offending vertex-group pair.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class EmptySample(FreecurError):
    """A scan was asked to run over an empty (or fully degenerate) sample."""
