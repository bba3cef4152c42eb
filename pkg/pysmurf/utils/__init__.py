"""
Utility functions.
"""

from pysmurf.utils.hashing import array_digest

__all__ = ["array_digest"]
