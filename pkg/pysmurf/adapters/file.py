"""
File Label Store - one flow file per key plus a plain-text manifest.

Layout under the store root:
    <sequence>/<frame>.flo          flow label (Middlebury format)
    <sequence>/<frame>.valid.png    validity, only when not all ones
    manifest.txt                    one JSON LabelEntry per line, last line wins
"""

import logging
import os
from pathlib import Path
from threading import Lock
from typing import Any, Dict, List, Optional, Union

import numpy as np

from pysmurf.adapters.base import BaseLabelStore, LabelEntry, validate_key
from pysmurf.errors import FlowFormatError
from pysmurf.flowkit.io import atomic_write, read_flow_file, read_image, write_flo, write_mask_png
from pysmurf.selfsup.types import SelfSupLabel

logger = logging.getLogger("pysmurf.labels")

MANIFEST_NAME = "manifest.txt"


class FileLabelStore(BaseLabelStore):
    """
    Filesystem label store.

    Label files are written with an atomic rename, so concurrent writers to
    distinct keys never observe partial files. Manifest updates are
    serialised by a lock.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = Lock()
        self._entries: Dict[str, LabelEntry] = {}
        self._load_manifest()

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def _flow_path(self, key: str) -> Path:
        return self.root / f"{validate_key(key)}.flo"

    def _valid_path(self, key: str) -> Path:
        return self.root / f"{validate_key(key)}.valid.png"

    def _load_manifest(self) -> None:
        if not self.manifest_path.exists():
            return
        for number, line in enumerate(self.manifest_path.read_text().splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = LabelEntry.from_json(line)
            except (ValueError, TypeError) as e:
                logger.warning("manifest line %d unreadable: %s", number, e)
                continue
            if entry.metadata.get("deleted"):
                self._entries.pop(entry.key, None)
            else:
                self._entries[entry.key] = entry

    def _append(self, entry: LabelEntry) -> None:
        with open(self.manifest_path, "a", encoding="utf-8") as handle:
            handle.write(entry.to_json() + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def get(self, key: str) -> Optional[SelfSupLabel]:
        flow_path = self._flow_path(key)
        if not flow_path.exists():
            return None
        record = read_flow_file(flow_path)
        valid = np.ones(record.shape)
        valid_path = self._valid_path(key)
        if valid_path.exists():
            mask = read_image(valid_path)[..., 0]
            if mask.shape != record.shape:
                raise FlowFormatError(f"validity image for '{key}' does not match the flow size")
            valid = (mask >= 0.5).astype(np.float64)
        entry = self.entry(key)
        provenance = entry.provenance if entry else "two_frame"
        metadata = dict(entry.metadata) if entry else {}
        return SelfSupLabel(record.flow, valid, provenance, metadata)

    def put(
        self,
        key: str,
        label: SelfSupLabel,
        seed: Optional[int] = None,
        record: Optional[Dict[str, Any]] = None,
    ) -> LabelEntry:
        entry = LabelEntry.from_label(key, label, seed, record)
        atomic_write(self._flow_path(key), write_flo(label.flow))
        valid_path = self._valid_path(key)
        if np.all(label.valid >= 0.5):
            if valid_path.exists():
                valid_path.unlink()
        else:
            write_mask_png(valid_path, (label.valid >= 0.5).astype(np.float64))
        with self._lock:
            self._append(entry)
            self._entries[key] = entry
        logger.debug("stored label %s (%s)", key, label.provenance)
        return entry

    def delete(self, key: str) -> bool:
        flow_path = self._flow_path(key)
        with self._lock:
            found = flow_path.exists()
            if found:
                flow_path.unlink()
                valid_path = self._valid_path(key)
                if valid_path.exists():
                    valid_path.unlink()
                self._append(LabelEntry(key=key, metadata={"deleted": True}))
                self._entries.pop(key, None)
            return found

    def exists(self, key: str) -> bool:
        return self._flow_path(key).exists()

    def entry(self, key: str) -> Optional[LabelEntry]:
        with self._lock:
            return self._entries.get(key)

    def manifest(self) -> List[LabelEntry]:
        with self._lock:
            return [self._entries[k] for k in sorted(self._entries)]

    def keys(self) -> List[str]:
        """Keys with a flow file on disk, including ones missing from the manifest."""
        found = {
            p.relative_to(self.root).with_suffix("").as_posix()
            for p in self.root.rglob("*.flo")
        }
        return sorted(found)
