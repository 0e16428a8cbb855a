"""Exception types raised across the package."""


class SrnetError(Exception):
    """Base class for every error this package raises on purpose."""


class OrderTooHigh(SrnetError):
    """Requested derivative order exceeds the configured evaluation limit."""


class NotEvaluable(SrnetError):
    """No closed form and no preset constants exist for this order."""


class AllZeroTargets(SrnetError):
    """Every channel weight is zero, the sampling distribution is degenerate."""


class DegenerateTarget(SrnetError):
    """Target density is zero on the whole estimation grid."""


class TrialBudgetExceeded(SrnetError):
    """Too many consecutive rejections while drawing one sample."""


class TooFewExamples(SrnetError):
    """Operation needs more examples than the dataset holds."""


class ZeroNormInput(SrnetError):
    """A zero-norm input vector was selected more often than the retry cap."""


class ShapeMismatch(SrnetError):
    """Array shapes are inconsistent with each other."""


class NonFiniteInput(SrnetError):
    """Input contains NaN or infinity."""


class DivergenceDetected(SrnetError):
    """Training loss blew up past the divergence guard.

    Carries the trace recorded up to the abort in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BadMagic(SrnetError):
    """File does not start with the expected magic number."""


class TruncatedFile(SrnetError):
    """File ends before the declared payload is complete."""


class CountMismatch(SrnetError):
    """Image and label files declare different example counts."""


class IncompatibleMetrics(SrnetError):
    """Run bundles share no common metric."""


class ConfigError(SrnetError):
    """Invalid experiment or CLI configuration."""
