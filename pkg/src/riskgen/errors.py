"""Exception hierarchy shared by all riskgen modules."""


class RiskGenError(Exception):
    """Base class for every error raised by the package."""


class TooShort(RiskGenError, ValueError):
    pass


class NonPositiveLevel(RiskGenError, ValueError):
    pass


class DegenerateColumn(RiskGenError, ValueError):
    pass


class DegenerateSeries(RiskGenError, ValueError):
    pass


class DimensionMismatch(RiskGenError, ValueError):
    pass


class BadParameter(RiskGenError, ValueError):
    """Invalid model or simulation parameters (e.g. |rho| > 1, alpha+beta >= 1)."""


class InsufficientHistory(RiskGenError, ValueError):
    pass


class MisalignedVols(RiskGenError, ValueError):
    pass


class NonStationary(RiskGenError, ValueError):
    pass


class RankDeficient(RiskGenError, ValueError):
    pass


class OptimizerFailure(RiskGenError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ShapeMismatch(RiskGenError, ValueError):
    pass


class NonScalarLoss(RiskGenError, ValueError):
    pass


class DivergedLoss(RiskGenError, RuntimeError):
    pass


class UntrainedModel(RiskGenError, RuntimeError):
    pass


class EmptySample(RiskGenError, ValueError):
    pass


class LengthMismatch(RiskGenError, ValueError):
    pass


class DegeneratePairs(RiskGenError, ValueError):
    pass


class TooFewPairs(RiskGenError, ValueError):
    pass


class TooFew(RiskGenError, ValueError):
    pass


class MissingCells(RiskGenError, ValueError):
    pass


class ConfigError(RiskGenError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass
