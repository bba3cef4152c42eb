"""
Tests for the async batch runner.
"""

import json
import threading
import time

import pytest

from pysmurf.audit import RunLogger
from pysmurf.batch import AsyncBatchRunner, BatchOutcome, run_sync
from pysmurf.errors import RejectedInputError


def _square(x):
    return x * x


def _fail_on_three(x):
    if x == 3:
        raise ValueError("three")
    return x


class TestBatchOutcome:
    """Tests for per-item outcomes."""

    def test_ok_and_unwrap(self):
        """Successful outcomes unwrap to their value."""
        outcome = BatchOutcome(0, "a", value=4)
        assert outcome.ok
        assert outcome.unwrap() == 4

    def test_error_reraised(self):
        """unwrap re-raises a captured error."""
        outcome = BatchOutcome(1, "b", error=KeyError("x"))
        assert not outcome.ok
        with pytest.raises(KeyError):
            outcome.unwrap()
        assert outcome.to_dict()["error"].startswith("KeyError")


class TestAsyncBatchRunner:
    """Tests for concurrent execution."""

    @pytest.mark.asyncio
    async def test_results_in_input_order(self):
        """Outcomes follow the input order, not completion order."""
        def slow_first(x):
            time.sleep(0.02 if x == 0 else 0.0)
            return x

        async with AsyncBatchRunner(workers=4) as runner:
            outcomes = await runner.run_batch(slow_first, [0, 1, 2, 3])
        assert [o.value for o in outcomes] == [0, 1, 2, 3]
        assert [o.key for o in outcomes] == ["0", "1", "2", "3"]

    @pytest.mark.asyncio
    async def test_runs_concurrently(self):
        """Items run on several worker threads."""
        seen = set()
        barrier = threading.Barrier(3, timeout=5)

        def wait(x):
            seen.add(threading.get_ident())
            barrier.wait()
            return x

        async with AsyncBatchRunner(workers=3) as runner:
            outcomes = await runner.run_batch(wait, [1, 2, 3])
        assert all(o.ok for o in outcomes)
        assert len(seen) == 3

    @pytest.mark.asyncio
    async def test_failures_captured(self):
        """Without fail_fast errors stay in their outcome."""
        async with AsyncBatchRunner(workers=2) as runner:
            outcomes = await runner.run_batch(_fail_on_three, [1, 2, 3, 4], keys=["a", "b", "c", "d"])
        assert [o.ok for o in outcomes] == [True, True, False, True]
        assert isinstance(outcomes[2].error, ValueError)
        assert outcomes[2].key == "c"

    @pytest.mark.asyncio
    async def test_fail_fast(self):
        """With fail_fast the first failure is raised."""
        async with AsyncBatchRunner(workers=2, fail_fast=True) as runner:
            with pytest.raises(ValueError, match="three"):
                await runner.run_batch(_fail_on_three, [1, 3, 4])

    @pytest.mark.asyncio
    async def test_key_count_checked(self):
        """One key per item."""
        async with AsyncBatchRunner() as runner:
            with pytest.raises(RejectedInputError):
                await runner.run_batch(_square, [1, 2], keys=["only"])

    @pytest.mark.asyncio
    async def test_run_one(self):
        """A single item runs through the pool."""
        async with AsyncBatchRunner(workers=1) as runner:
            outcome = await runner.run_one(_square, 7, index=2, key="seven")
        assert outcome.value == 49
        assert outcome.index == 2
        assert outcome.latency_ms >= 0.0

    @pytest.mark.asyncio
    async def test_run_sync_inside_loop(self):
        """run_sync works while an event loop is running."""
        async def answer():
            return 42

        assert run_sync(answer()) == 42

    def test_sync_wrapper(self):
        """run_batch_sync works from plain code."""
        with AsyncBatchRunner(workers=2) as runner:
            outcomes = runner.run_batch_sync(_square, [1, 2, 3])
        assert [o.unwrap() for o in outcomes] == [1, 4, 9]

    def test_bad_workers(self):
        """At least one worker is needed."""
        with pytest.raises(RejectedInputError):
            AsyncBatchRunner(workers=0)

    def test_items_logged(self, tmp_path):
        """Each item is logged as a JSON event."""
        log_file = tmp_path / "batch.jsonl"
        logger = RunLogger(log_file=str(log_file))
        with AsyncBatchRunner(workers=2, run_logger=logger, event="eval_item") as runner:
            runner.run_batch_sync(_fail_on_three, [1, 3], keys=["x", "y"])
        for handler in logger._logger.handlers:
            handler.flush()
        events = [json.loads(line) for line in log_file.read_text().splitlines()]
        assert sorted(e["key"] for e in events) == ["x", "y"]
        assert all(e["event"] == "eval_item" for e in events)
        assert {e["key"]: e["ok"] for e in events} == {"x": True, "y": False}
