"""Text-profile embeddings for zero-shot recommendation."""

__version__ = "0.1.0"
