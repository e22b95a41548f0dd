"""Order batching, sequencing and routing with release times."""

__version__ = "0.1.0"
