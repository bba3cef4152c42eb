"""
In-Memory Label Store - for tests and single-process runs.
"""

from threading import Lock
from typing import Any, Dict, List, Optional, Tuple

from pysmurf.adapters.base import BaseLabelStore, LabelEntry, validate_key
from pysmurf.selfsup.types import SelfSupLabel


class InMemoryLabelStore(BaseLabelStore):
    """
    Thread-safe in-memory label store. Data is lost when the process exits.

    Usage:
        store = InMemoryLabelStore()
        store.put("seq/000001", label)
        label = store.get("seq/000001")
    """

    def __init__(self) -> None:
        self._store: Dict[str, Tuple[SelfSupLabel, LabelEntry]] = {}
        self._lock = Lock()

    def get(self, key: str) -> Optional[SelfSupLabel]:
        with self._lock:
            item = self._store.get(key)
            return item[0] if item else None

    def put(
        self,
        key: str,
        label: SelfSupLabel,
        seed: Optional[int] = None,
        record: Optional[Dict[str, Any]] = None,
    ) -> LabelEntry:
        entry = LabelEntry.from_label(validate_key(key), label, seed, record)
        with self._lock:
            self._store[key] = (label, entry)
        return entry

    def delete(self, key: str) -> bool:
        with self._lock:
            return self._store.pop(key, None) is not None

    def exists(self, key: str) -> bool:
        with self._lock:
            return key in self._store

    def entry(self, key: str) -> Optional[LabelEntry]:
        with self._lock:
            item = self._store.get(key)
            return item[1] if item else None

    def manifest(self) -> List[LabelEntry]:
        with self._lock:
            return [self._store[k][1] for k in sorted(self._store)]

    def clear_all(self) -> int:
        with self._lock:
            count = len(self._store)
            self._store.clear()
            return count
