"""molrag: retrieval-augmented in-context learning for molecule-caption translation."""

__version__ = "0.1.0"
