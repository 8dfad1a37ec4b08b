"""Exception hierarchy shared by every leafstab module."""


class LeafstabError(Exception):
    """Base class for all leafstab errors."""


class NumericalError(LeafstabError):
    """A numerical operation could not be completed reliably."""


class InvalidChartPoint(LeafstabError, ValueError):
    pass


class TransitionUndefined(LeafstabError, ValueError):
    pass


class SingularMetric(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class BasisNotTangent(LeafstabError, ValueError):
    pass


class NumericalAmbiguity(NumericalError):
    """Sylvester minors and eigenvalues disagree about definiteness."""


class InvalidParams(LeafstabError, ValueError):
    pass


class AsymmetricParams(LeafstabError, ValueError):
    """Operation needs m1 == m2 and I1 == I2."""


class ZeroSpin(LeafstabError, ValueError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class MaxStepsExceeded(NumericalError):
    pass


class ProjectionFailed(NumericalError):
    pass


class ParseError(LeafstabError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


class ValidationError(LeafstabError, ValueError):
    pass
