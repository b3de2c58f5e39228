"""Exception types shared across the package.

Every error message names the offending field, line or dimension so CLI
diagnostics stay actionable.
"""


class NuggetError(Exception):
    """Base class for all errors raised by this package."""


class CorpusFormatError(NuggetError):
    """A corpus or prediction file could not be parsed (carries a line number)."""


class CorpusValidationError(NuggetError):
    """A structurally valid record violates a data invariant."""


class ConfigError(NuggetError):
    """A configuration value is missing, unknown or out of range."""


class ShapeError(NuggetError):
    """Tensor shapes passed to a numeric primitive do not line up."""


class NumericError(NuggetError):
    """A non-finite value appeared where finite numbers are required."""


class CheckpointError(NuggetError):
    """A parameter checkpoint is malformed or incompatible with the model."""


class EvalInputError(NuggetError):
    """Gold/prediction inputs to the scorer are inconsistent."""
