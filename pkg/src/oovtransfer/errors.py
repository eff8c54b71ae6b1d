"""Semantic exception hierarchy shared across the package."""


class OovError(Exception):
    """Base class for all package-specific errors."""


class UnknownVariableError(OovError, KeyError):
    """A requested variable name does not exist in the dataset."""


class NonFiniteSampleError(OovError, ValueError):
    """Sampling produced NaN/Inf values (usually distribution-parameter misuse)."""


class WrongVariantError(OovError, TypeError):
    """A closed-form oracle was requested for an unsupported function variant."""


class ShapeMismatchError(OovError, ValueError):
    """Input dimensions are inconsistent with the model or with each other."""


class DivergenceError(OovError, ArithmeticError):
    """Training loss became non-finite (learning rate too high, bad scaling)."""


class InsufficientSamplesError(OovError, ValueError):
    """Too few observations to compute the requested statistic."""


class SkewDegenerateError(OovError, ValueError):
    """|third central moment| of the unobserved covariate is below the
    identifiability threshold; the residual-skew signal is absent."""


class DegenerateMomentsError(OovError, ValueError):
    """The cross-moment system of the two-variable extension is ill-conditioned
    or carries no third-order signal."""


class ZeroDivisorError(OovError, ZeroDivisionError):
    """A closed-form adjustment formula would divide by a (near-)zero table entry."""


class CheckpointFormatError(OovError, ValueError):
    """A serialized model or predictor file is malformed or shape-inconsistent."""
