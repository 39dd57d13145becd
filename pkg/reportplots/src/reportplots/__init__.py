"""Figures from bubblelab output files.

A read-only consumer of the documented CSV/JSON schemas; no computation of
the underlying mathematics happens here.
"""

__version__ = "0.1.0"
