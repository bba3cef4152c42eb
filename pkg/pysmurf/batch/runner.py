"""
AsyncBatchRunner - run per-item work across a thread pool.

Items are independent (one solve, one label, one evaluation each) so they
parallelise trivially; results come back in input order regardless of
completion order.
"""

import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Generic, List, Optional, Sequence, TypeVar

from pysmurf.audit.logger import RunLogger
from pysmurf.errors import RejectedInputError

logger = logging.getLogger("pysmurf.batch")

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class BatchOutcome(Generic[R]):
    """Result (or captured error) of one batch item."""
    index: int
    key: str
    value: Optional[R] = field(default=None, compare=False)
    error: Optional[BaseException] = field(default=None, compare=False)
    latency_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None

    def unwrap(self) -> R:
        if self.error is not None:
            raise self.error
        return self.value  # type: ignore[return-value]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "key": self.key,
            "ok": self.ok,
            "error": None if self.error is None else f"{type(self.error).__name__}: {self.error}",
            "latency_ms": round(self.latency_ms, 3),
        }


class AsyncBatchRunner:
    """
    Thread-pool batch executor with an async front end.

    Usage:
    ```python
    async with AsyncBatchRunner(workers=4) as runner:
        outcomes = await runner.run_batch(solve_item, items, keys=[i.key for i in items])
    ```

    With ``fail_fast`` the first failure is re-raised once every item has
    finished; otherwise failures are captured per outcome.
    """

    def __init__(
        self,
        workers: int = 4,
        fail_fast: bool = False,
        run_logger: Optional[RunLogger] = None,
        event: str = "batch_item",
    ):
        if workers < 1:
            raise RejectedInputError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.fail_fast = fail_fast
        self._run_logger = run_logger
        self._event = event
        self._executor = ThreadPoolExecutor(max_workers=workers)

    def _timed(self, fn: Callable[[T], R], item: T, index: int, key: str) -> BatchOutcome:
        start = time.perf_counter()
        try:
            value = fn(item)
            error = None
        except Exception as e:
            logger.warning("batch item %s failed: %s", key, e)
            value, error = None, e
        outcome = BatchOutcome(index, key, value, error, (time.perf_counter() - start) * 1000)
        if self._run_logger is not None:
            self._run_logger.log_event(self._event, outcome.to_dict())
        return outcome

    async def run_one(self, fn: Callable[[T], R], item: T, index: int = 0, key: str = "") -> BatchOutcome:
        """Run a single item in the thread pool."""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, self._timed, fn, item, index, key or str(index))

    async def run_batch(
        self,
        fn: Callable[[T], R],
        items: Sequence[T],
        keys: Optional[Sequence[str]] = None,
    ) -> List[BatchOutcome]:
        """
        Run ``fn`` over every item concurrently.

        Returns:
            One BatchOutcome per item, in input order
        """
        items = list(items)
        if keys is None:
            keys = [str(i) for i in range(len(items))]
        elif len(keys) != len(items):
            raise RejectedInputError(f"{len(keys)} keys for {len(items)} items")
        tasks = [self.run_one(fn, item, i, key) for i, (item, key) in enumerate(zip(items, keys))]
        outcomes = list(await asyncio.gather(*tasks))
        if self.fail_fast:
            for outcome in outcomes:
                if not outcome.ok:
                    raise outcome.error  # type: ignore[misc]
        return outcomes

    def run_batch_sync(
        self,
        fn: Callable[[T], R],
        items: Sequence[T],
        keys: Optional[Sequence[str]] = None,
    ) -> List[BatchOutcome]:
        """Synchronous wrapper around run_batch."""
        return run_sync(self.run_batch(fn, items, keys))

    async def __aenter__(self) -> "AsyncBatchRunner":
        return self

    async def __aexit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self._executor.shutdown(wait=True)

    def __enter__(self) -> "AsyncBatchRunner":
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self.close()

    def close(self) -> None:
        self._executor.shutdown(wait=True)


def run_sync(coro) -> Any:
    """
    Run a coroutine to completion from synchronous code.

    Works when an event loop is already running (e.g. in a notebook) by
    running the coroutine on a helper thread.
    """
    try:
        loop = asyncio.get_running_loop()
    except RuntimeError:
        loop = None

    if loop is not None and loop.is_running():
        with ThreadPoolExecutor(max_workers=1) as pool:
            return pool.submit(asyncio.run, coro).result()
    return asyncio.run(coro)
