"""Surface-code logical error rates by decoding, sampling and splitting."""

__version__ = "0.1.0"
