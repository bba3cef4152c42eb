"""
Dataset ingestion for Sintel, KITTI 2015 and flat frame directories.

Items are yielded in a stable order: sequence name, then frame index.
Images and ground truth are loaded lazily.
"""

import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Literal, Optional, Tuple, Union

import numpy as np

from pysmurf.errors import DatasetError, RejectedInputError
from pysmurf.flowkit.io import FlowFileRecord, read_flow_file, read_image

logger = logging.getLogger("pysmurf.datasets")

Layout = Literal["sintel", "kitti15", "flat-pairs"]
Kind = Literal["pairs", "triplets"]

IMAGE_SUFFIXES = {".png", ".ppm"}
_FRAME_PATTERN = re.compile(r"^(.*?)(\d+)$")


@dataclass(frozen=True)
class DatasetItem:
    """Consecutive frames (2 for pairs, 3 for triplets) plus optional ground truth."""
    sequence: str
    frame: int
    paths: Tuple[Path, ...]
    gt_path: Optional[Path] = None
    noc_path: Optional[Path] = None

    @property
    def key(self) -> str:
        """Label-store key of the item's reference frame."""
        return f"{self.sequence}/{self.frame:06d}"

    def images(self) -> List[np.ndarray]:
        return [read_image(p) for p in self.paths]

    def ground_truth(self) -> Optional[FlowFileRecord]:
        return read_flow_file(self.gt_path) if self.gt_path is not None else None

    def noc_mask(self) -> Optional[np.ndarray]:
        """Non-occluded validity, when the dataset ships one."""
        return read_flow_file(self.noc_path).valid if self.noc_path is not None else None

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "paths": [str(p) for p in self.paths],
            "gt": str(self.gt_path) if self.gt_path else None,
        }


def _frame_index(path: Path) -> Tuple[str, int]:
    match = _FRAME_PATTERN.match(path.stem)
    if match is None:
        raise DatasetError(f"cannot parse a frame index from '{path.name}'")
    return match.group(1), int(match.group(2))


def _image_files(directory: Path) -> List[Path]:
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _first_existing(*candidates: Path) -> Optional[Path]:
    return next((c for c in candidates if c.is_file()), None)


def _group_frames(files: List[Path]) -> Dict[str, Dict[int, Path]]:
    groups: Dict[str, Dict[int, Path]] = defaultdict(dict)
    for path in files:
        try:
            prefix, index = _frame_index(path)
        except DatasetError as e:
            logger.warning("skipping %s: %s", path, e)
            continue
        groups[prefix][index] = path
    return groups


def _windows(
    sequence: str,
    frames: Dict[int, Path],
    kind: Kind,
    gt_for,
) -> Iterator[DatasetItem]:
    span = 2 if kind == "pairs" else 3
    indices = sorted(frames)
    for start in indices:
        wanted = [start + offset for offset in range(span)]
        if wanted[-1] > indices[-1]:
            break
        missing = [i for i in wanted if i not in frames]
        if missing:
            logger.warning("sequence '%s': frames %s missing, skipping window at %d", sequence, missing, start)
            continue
        reference = wanted[0] if kind == "pairs" else wanted[1]
        gt_path, noc_path = gt_for(sequence, reference, frames[reference])
        yield DatasetItem(sequence, reference, tuple(frames[i] for i in wanted), gt_path, noc_path)


def _flat_items(root: Path, kind: Kind) -> Iterator[DatasetItem]:
    flow_dir = root / "flow"

    def gt_for(sequence: str, index: int, path: Path) -> Tuple[Optional[Path], Optional[Path]]:
        return _first_existing(flow_dir / f"{path.stem}.flo", flow_dir / f"{path.stem}.png"), None

    groups = _group_frames(_image_files(root))
    for prefix in sorted(groups):
        yield from _windows(prefix.rstrip("_-") or root.name, groups[prefix], kind, gt_for)


def _sintel_items(root: Path, kind: Kind, pass_name: str) -> Iterator[DatasetItem]:
    image_root = root / pass_name
    if not image_root.is_dir():
        raise DatasetError(f"Sintel pass directory not found: {image_root}")
    flow_root = root / "flow"

    def gt_for(sequence: str, index: int, path: Path) -> Tuple[Optional[Path], Optional[Path]]:
        return _first_existing(flow_root / sequence / f"{path.stem}.flo"), None

    for sequence_dir in sorted(p for p in image_root.iterdir() if p.is_dir()):
        groups = _group_frames(_image_files(sequence_dir))
        for prefix in sorted(groups):
            yield from _windows(sequence_dir.name, groups[prefix], kind, gt_for)


def _kitti_items(root: Path, kind: Kind) -> Iterator[DatasetItem]:
    image_dir = root / "image_2"
    if not image_dir.is_dir():
        raise DatasetError(f"KITTI image directory not found: {image_dir}")

    def gt_for(sequence: str, index: int, path: Path) -> Tuple[Optional[Path], Optional[Path]]:
        name = f"{sequence}_{index:02d}.png"
        return _first_existing(root / "flow_occ" / name), _first_existing(root / "flow_noc" / name)

    groups = _group_frames(_image_files(image_dir))
    for prefix in sorted(groups):
        yield from _windows(prefix.rstrip("_"), groups[prefix], kind, gt_for)


def ingest_dataset(
    root: Union[str, Path],
    layout: Layout,
    kind: Kind = "pairs",
    pass_name: str = "clean",
) -> Iterator[DatasetItem]:
    """
    Iterate frame pairs or triplets of a dataset directory.

    Layouts:
        flat-pairs: numbered frames in ``root``; optional ``root/flow/<frame>.flo|.png``
        sintel: ``root/<pass>/<seq>/frame_NNNN.png``, ``root/flow/<seq>/frame_NNNN.flo``
        kitti15: ``root/image_2/<seq>_NN.png``, ``root/flow_occ`` and ``root/flow_noc``

    Raises:
        DatasetError: missing root or no usable items
        RejectedInputError: unknown layout or kind
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root not found: {root}")
    if kind not in ("pairs", "triplets"):
        raise RejectedInputError(f"kind must be 'pairs' or 'triplets', got '{kind}'")
    if layout == "flat-pairs":
        items = _flat_items(root, kind)
    elif layout == "sintel":
        items = _sintel_items(root, kind, pass_name)
    elif layout == "kitti15":
        items = _kitti_items(root, kind)
    else:
        raise RejectedInputError(f"unknown dataset layout '{layout}'")

    count = 0
    for item in items:
        count += 1
        yield item
    if count == 0:
        raise DatasetError(f"no {kind} found in {root} ({layout} layout)")
