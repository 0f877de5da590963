"""Exception hierarchy shared by all spikecode modules."""


class SpikecodeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SpikecodeError):
    """A config value is out of range or inconsistent."""


class IngestionError(SpikecodeError):
    """An audio clip or manifest entry could not be loaded."""


class ParseError(SpikecodeError):
    """A structured text file (manifest, model, CSV) is malformed."""


class EncodingError(SpikecodeError):
    """An encoder received input outside its admissible range."""


class VectorizationError(SpikecodeError):
    """A spike pattern cannot be vectorized (e.g. zero duration)."""


class ShapeError(SpikecodeError):
    """Dimension mismatch between data and a model."""


class TrainingError(SpikecodeError):
    """Training preconditions are violated (e.g. a single class)."""
