"""Structured run logging."""

from pysmurf.audit.logger import RunLogger

__all__ = ["RunLogger"]
