"""Exception hierarchy shared by every module."""


class LsfError(Exception):
    """Base class for all library errors."""


class DimensionError(LsfError, ValueError):
    """Vectors or index sets disagree on dimension."""


class ParameterError(LsfError, ValueError):
    """Requested parameters violate a construction precondition."""


class ConstructionError(LsfError, RuntimeError):
    """A randomized construction exhausted its retry budget."""


class CostGuardError(LsfError, ValueError):
    """An exhaustive computation was requested beyond its cost guard."""


class UndefinedSimilarityError(LsfError, ValueError):
    """Similarity of two empty sets is undefined."""


class VerificationError(LsfError, AssertionError):
    """A combinatorial guarantee failed verification."""


class FormatError(LsfError, ValueError):
    """A file or container could not be parsed."""
