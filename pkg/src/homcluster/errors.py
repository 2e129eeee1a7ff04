"""Exception hierarchy shared across the package."""


class HomclusterError(Exception):
    """Base class for all errors raised by this package."""


class ParseFailure(HomclusterError):
    """A cell could not be parsed under its declared column kind."""


class ConstantColumn(HomclusterError):
    """A continuous column has zero spread and cannot be standardized."""


class SchemaMismatch(HomclusterError):
    """Dataset schema does not match the one a solution was fitted on."""


class UnseenLevel(HomclusterError):
    """A categorical level was not present when the solution was fitted."""


class NoCategoricalAttributes(HomclusterError):
    """The dataset has no categorical attribute to encode."""


class DegenerateData(HomclusterError):
    """No nontrivial embedding dimension exists for this data."""


class RankDeficient(HomclusterError):
    """Centered score columns are linearly dependent."""


class TooLarge(HomclusterError):
    """Input exceeds the size guard of a dense diagnostic routine."""


class KTooLarge(HomclusterError):
    """Requested more clusters than available points."""


class KLessThanTwo(HomclusterError):
    """An index or operation requires at least two clusters."""


class EmptyDataset(HomclusterError):
    """Operation received a dataset with no rows."""


class EmptyCluster(HomclusterError):
    """A referenced cluster contains no points."""


class TooFewLeafEntries(HomclusterError):
    """CF-tree produced fewer leaf entries than requested clusters."""


class SampleTooSmall(HomclusterError):
    """CLARA sample size must exceed the number of medoids."""
