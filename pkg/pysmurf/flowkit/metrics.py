"""
Benchmark metrics: endpoint error and outlier rate.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.resample import resize_flow, resize_image
from pysmurf.fields.types import as_flow, as_image, as_mask
from pysmurf.flowkit.io import FlowFileRecord

ErrorMode = Literal["conjunction", "disjunction"]

OUTLIER_PIXELS = 3.0
OUTLIER_RELATIVE = 0.05

CSV_FIELDS = ("name", "epe", "epe_noc", "error_rate", "count_all", "count_valid", "count_noc")


@dataclass(frozen=True)
class EvalStats:
    """Metrics of one prediction against ground truth."""
    epe: float
    epe_noc: float
    error_rate: float        # percent
    count_all: int
    count_valid: int
    count_noc: int

    def to_dict(self) -> dict:
        return {
            "epe": self.epe,
            "epe_noc": self.epe_noc,
            "error_rate": self.error_rate,
            "count_all": self.count_all,
            "count_valid": self.count_valid,
            "count_noc": self.count_noc,
        }

    def to_row(self, name: str) -> dict:
        return {"name": name, **self.to_dict()}

    @classmethod
    def mean(cls, stats: Sequence["EvalStats"]) -> "EvalStats":
        """Pixel-weighted average over several items."""
        if not stats:
            raise RejectedInputError("no statistics to average")
        valid = sum(s.count_valid for s in stats)
        noc = sum(s.count_noc for s in stats)
        return cls(
            epe=sum(s.epe * s.count_valid for s in stats) / valid,
            epe_noc=sum(s.epe_noc * s.count_noc for s in stats) / noc if noc else float("nan"),
            error_rate=sum(s.error_rate * s.count_valid for s in stats) / valid,
            count_all=sum(s.count_all for s in stats),
            count_valid=valid,
            count_noc=noc,
        )


def _as_record(gt: Union[FlowFileRecord, np.ndarray]) -> FlowFileRecord:
    return gt if isinstance(gt, FlowFileRecord) else FlowFileRecord.from_flow(gt)


def _endpoint_errors(pred: np.ndarray, gt: FlowFileRecord) -> Tuple[np.ndarray, np.ndarray]:
    pred = as_flow(pred, "prediction")
    if pred.shape != gt.flow.shape:
        raise RejectedInputError(
            f"prediction {pred.shape[:2]} and ground truth {gt.flow.shape[:2]} dimensions differ"
        )
    errors = np.sqrt(np.sum((pred - gt.flow) ** 2, axis=2))
    valid = gt.valid >= 0.5
    if not np.any(valid):
        raise RejectedInputError("ground truth has no valid pixels")
    return errors, valid


def _outliers(errors: np.ndarray, gt_flow: np.ndarray, mode: ErrorMode) -> np.ndarray:
    magnitude = np.sqrt(np.sum(gt_flow ** 2, axis=2))
    absolute = errors > OUTLIER_PIXELS
    relative = errors > OUTLIER_RELATIVE * magnitude
    if mode == "conjunction":
        return absolute & relative
    if mode == "disjunction":
        return absolute | relative
    raise RejectedInputError(f"error mode must be 'conjunction' or 'disjunction', got '{mode}'")


def error_rate(
    pred: np.ndarray,
    gt: Union[FlowFileRecord, np.ndarray],
    mode: ErrorMode = "conjunction",
) -> float:
    """
    Percentage of valid pixels whose endpoint error exceeds 3 px and 5% of
    the ground-truth length ("disjunction": either threshold).
    """
    gt = _as_record(gt)
    errors, valid = _endpoint_errors(pred, gt)
    return float(100.0 * _outliers(errors, gt.flow, mode)[valid].mean())


def epe(
    pred: np.ndarray,
    gt: Union[FlowFileRecord, np.ndarray],
    noc: Optional[np.ndarray] = None,
    mode: ErrorMode = "conjunction",
) -> EvalStats:
    """
    Endpoint error over valid pixels, its non-occluded variant and the
    error rate.

    Args:
        pred: predicted flow
        gt: ground truth record (or plain flow, all valid)
        noc: optional non-occlusion mask (1 = non-occluded)
        mode: error-rate threshold combination
    """
    gt = _as_record(gt)
    errors, valid = _endpoint_errors(pred, gt)
    if noc is None:
        noc_mask = valid
    else:
        noc_mask = valid & (as_mask(noc, errors.shape, "noc") >= 0.5)
    count_noc = int(noc_mask.sum())
    return EvalStats(
        epe=float(errors[valid].mean()),
        epe_noc=float(errors[noc_mask].mean()) if count_noc else float("nan"),
        error_rate=float(100.0 * _outliers(errors, gt.flow, mode)[valid].mean()),
        count_all=int(errors.size),
        count_valid=int(valid.sum()),
        count_noc=count_noc,
    )


def evaluate_pair(
    image1: np.ndarray,
    image2: np.ndarray,
    gt: Union[FlowFileRecord, np.ndarray],
    estimator,
    working_size: Optional[Tuple[int, int]] = None,
    noc: Optional[np.ndarray] = None,
    mode: ErrorMode = "conjunction",
) -> Tuple[np.ndarray, EvalStats]:
    """
    Estimate flow for a pair and score it.

    With ``working_size`` the images are bilinearly resized before
    estimation and the flow is resized back, vectors rescaled.

    Args:
        estimator: callable (image1, image2) -> flow H x W x 2
    """
    img1 = as_image(image1, "image1")
    img2 = as_image(image2, "image2")
    shape = img1.shape[:2]
    if working_size is not None and tuple(working_size) != shape:
        flow = np.asarray(estimator(resize_image(img1, working_size), resize_image(img2, working_size)))
        flow = resize_flow(flow, shape)
    else:
        flow = np.asarray(estimator(img1, img2))
    return flow, epe(flow, gt, noc, mode)


def write_stats_csv(path: Union[str, Path], rows: Iterable[Tuple[str, EvalStats]]) -> None:
    """One CSV row per (name, stats)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for name, stats in rows:
            writer.writerow(stats.to_row(name))


def format_stats_table(rows: Sequence[Tuple[str, EvalStats]]) -> str:
    """Fixed-width text table of (name, stats) rows."""
    width = max([len("name")] + [len(name) for name, _ in rows])
    lines = [f"{'name':<{width}}  {'EPE':>9}  {'EPE-noc':>9}  {'ER%':>7}  {'valid':>8}"]
    for name, s in rows:
        lines.append(
            f"{name:<{width}}  {s.epe:>9.4f}  {s.epe_noc:>9.4f}  {s.error_rate:>7.3f}  {s.count_valid:>8d}"
        )
    return "\n".join(lines)
