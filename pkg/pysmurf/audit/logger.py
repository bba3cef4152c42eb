"""
Run Logger - JSON structured logging of solver, label and evaluation events.

One compact JSON object per line, ready for ``jq`` or a log aggregator.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

LOG_FORMAT_VERSION = "1.0"


def _default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


class RunLogger:
    """
    Structured JSON logger for pysmurf runs.

    Events: solver_level, solver_complete, label_written, eval_item, gradcheck,
    selftest_check.
    """

    def __init__(
        self,
        enabled: bool = True,
        log_file: Optional[str] = None,
        log_level: int = logging.INFO,
        console: bool = False,
    ):
        """
        Args:
            enabled: whether logging is active
            log_file: path of a JSON-lines file (None = no file)
            log_level: Python logging level
            console: also write to stderr
        """
        self.enabled = enabled
        self._logger = logging.getLogger("pysmurf.audit")
        self._logger.setLevel(log_level)

        if console and not any(getattr(h, "_pysmurf_console", False) for h in self._logger.handlers):
            handler = logging.StreamHandler()
            handler.setFormatter(logging.Formatter("%(message)s"))
            handler._pysmurf_console = True
            self._logger.addHandler(handler)

        if log_file:
            path = Path(log_file).resolve()
            if not any(getattr(h, "baseFilename", None) == str(path) for h in self._logger.handlers):
                path.parent.mkdir(parents=True, exist_ok=True)
                file_handler = logging.FileHandler(path)
                file_handler.setFormatter(logging.Formatter("%(message)s"))
                self._logger.addHandler(file_handler)

    def log_event(self, event_type: str, details: Dict[str, Any]) -> None:
        """Log one event with its payload."""
        if not self.enabled:
            return
        entry = {
            "event": event_type,
            "version": LOG_FORMAT_VERSION,
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            **details,
        }
        self._logger.info(json.dumps(entry, separators=(",", ":"), default=_default))

    def log(self, event_type: str, result: Any, **extra: Any) -> None:
        """Log any result object exposing ``to_dict()``."""
        self.log_event(event_type, {**result.to_dict(), **extra})
