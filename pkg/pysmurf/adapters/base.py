"""
Base Label Store - Abstract interface for self-supervision label persistence.

Labels are keyed by ``<sequence>/<frame>`` and carry a manifest entry with
provenance, seed and the augmentation record needed to replay them.
"""

import json
import re
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

from pysmurf.errors import RejectedInputError
from pysmurf.selfsup.types import SelfSupLabel

_KEY_PATTERN = re.compile(r"^[A-Za-z0-9_.\-]+(/[A-Za-z0-9_.\-]+)*$")


def validate_key(key: str) -> str:
    """Reject keys that could escape a store directory."""
    if not isinstance(key, str) or not _KEY_PATTERN.match(key) or ".." in key.split("/"):
        raise RejectedInputError(f"invalid label key '{key}'")
    return key


@dataclass
class LabelEntry:
    """
    Manifest line for one stored label.

    This is the plain-text sidecar that makes a label reproducible.
    """
    key: str
    provenance: str = "two_frame"
    shape: List[int] = field(default_factory=list)
    valid_fraction: float = 1.0
    seed: Optional[int] = None
    record: Optional[Dict[str, Any]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    created: float = field(default_factory=lambda: datetime.utcnow().timestamp())

    @classmethod
    def from_label(
        cls,
        key: str,
        label: SelfSupLabel,
        seed: Optional[int] = None,
        record: Optional[Dict[str, Any]] = None,
    ) -> "LabelEntry":
        return cls(
            key=validate_key(key),
            provenance=label.provenance,
            shape=list(label.shape),
            valid_fraction=float(label.valid.mean()),
            seed=seed,
            record=record,
            metadata=dict(label.metadata),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=str)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LabelEntry":
        return cls(**data)

    @classmethod
    def from_json(cls, json_str: str) -> "LabelEntry":
        return cls.from_dict(json.loads(json_str))


class BaseLabelStore(ABC):
    """
    Abstract base class for label storage backends.

    Implementations must tolerate concurrent ``put`` calls for distinct keys.

    Usage:
    ```python
    from pysmurf.adapters import FileLabelStore

    store = FileLabelStore("labels/sintel")
    store.put("alley_1/000003", label, seed=7)
    label = store.get("alley_1/000003")
    ```
    """

    @abstractmethod
    def get(self, key: str) -> Optional[SelfSupLabel]:
        """
        Retrieve a label.

        Returns:
            SelfSupLabel if found, None otherwise
        """
        pass

    @abstractmethod
    def put(
        self,
        key: str,
        label: SelfSupLabel,
        seed: Optional[int] = None,
        record: Optional[Dict[str, Any]] = None,
    ) -> LabelEntry:
        """
        Store a label, replacing any previous label under the same key.

        Returns:
            The manifest entry written for the label
        """
        pass

    @abstractmethod
    def delete(self, key: str) -> bool:
        """
        Returns:
            True if deleted, False if not found
        """
        pass

    @abstractmethod
    def exists(self, key: str) -> bool:
        pass

    @abstractmethod
    def entry(self, key: str) -> Optional[LabelEntry]:
        """Manifest entry of a stored label."""
        pass

    def keys(self) -> List[str]:
        """All stored keys, sorted."""
        return sorted(e.key for e in self.manifest())

    def manifest(self) -> List[LabelEntry]:
        """
        Manifest entries of every stored label, sorted by key.

        Default returns empty list. Override for full support.
        """
        return []

    def clear_all(self) -> int:
        """
        Remove every label.

        Returns count of deleted labels.
        """
        keys = self.keys()
        return sum(1 for key in keys if self.delete(key))

    def close(self) -> None:
        """Clean up resources. Override if needed."""
        pass

    def __len__(self) -> int:
        return len(self.keys())

    def __contains__(self, key: str) -> bool:
        return self.exists(key)
