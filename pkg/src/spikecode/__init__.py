"""spikecode: temporal and population spike encodings for audio classification."""

__version__ = "0.1.0"

from . import encoders, frontend, harness, svm, tempotron, vectorizers  # noqa: F401
