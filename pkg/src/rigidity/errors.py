"""Exception hierarchy shared by all modules."""


class RigidityError(Exception):
    """Base class for errors raised by this package."""


class InvalidDensity(RigidityError):
    """A spectral density violates a standing assumption (sign, evenness, flags)."""


class InvalidCovariance(RigidityError):
    """A covariance sequence is not even, not bounded by C(0) or not PSD."""


class NonSummableCovariance(RigidityError):
    pass


class NegativeDensity(RigidityError):
    pass


class QuadratureFailure(RigidityError):
    pass


class EvaluationFailure(RigidityError):
    """The density returned NaN or a negative value where it was sampled."""


class IllConditioned(RigidityError):
    pass


class MissingAnnotations(RigidityError):
    pass


class InconsistentAnnotations(RigidityError):
    pass


class TransformMismatch(RigidityError):
    pass


class EmbeddingFailure(RigidityError):
    pass


class ConfigError(RigidityError):
    """Raised for malformed or schema-violating job configuration."""


class NotHyperuniformWarning(UserWarning):
    pass


class SingularGramWarning(UserWarning):
    pass
