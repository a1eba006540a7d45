"""Exception taxonomy shared across modules."""


class PolymerlabError(Exception):
    pass


class ConfigError(PolymerlabError):
    pass


class ResourceError(PolymerlabError):
    """Memory-budget or window-size violations."""


class NumericError(PolymerlabError):
    pass


class EmptySupport(NumericError):
    pass


class InfiniteRange(NumericError):
    """Operation requires a finite-range kernel."""


class EmptyK(NumericError):
    pass


class RankDeficient(NumericError):
    """Support does not span a full-dimensional sublattice."""


class SingularCovariance(NumericError):
    pass


class DimensionTooLow(NumericError):
    pass


class EmptySurface(NumericError):
    pass


class NonPositiveValues(NumericError):
    pass


class NotSymmetric(NumericError):
    pass
