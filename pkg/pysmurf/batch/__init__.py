"""
Concurrent per-item execution for batch commands.
"""

from pysmurf.batch.runner import AsyncBatchRunner, BatchOutcome, run_sync

__all__ = ["AsyncBatchRunner", "BatchOutcome", "run_sync"]
