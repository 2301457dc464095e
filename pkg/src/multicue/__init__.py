"""Multi-cue person recognition in photo albums around pluggable embeddings."""

__version__ = "0.1.0"
