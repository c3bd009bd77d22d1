"""podforge: topic to multi-speaker podcast audio, with a reference-free evaluation harness."""

__version__ = "0.1.0"
