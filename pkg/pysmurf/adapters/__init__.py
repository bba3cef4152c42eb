"""
Label stores for self-supervision labels.
"""

from pysmurf.adapters.base import BaseLabelStore, LabelEntry, validate_key
from pysmurf.adapters.memory import InMemoryLabelStore
from pysmurf.adapters.file import FileLabelStore

__all__ = [
    "BaseLabelStore",
    "LabelEntry",
    "validate_key",
    "InMemoryLabelStore",
    "FileLabelStore",
]
