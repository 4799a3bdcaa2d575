"""Long-time coherent integration of maneuvering targets under jittered pulse timing."""

__version__ = "0.1.0"
