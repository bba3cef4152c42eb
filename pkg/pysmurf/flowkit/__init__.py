"""
Flow file formats, datasets, metrics and visualisation.
"""

from pysmurf.flowkit.io import (
    FLO_MAGIC,
    KITTI_OFFSET,
    KITTI_SCALE,
    FlowFileRecord,
    kitti_quantize,
    read_flo,
    read_flow_file,
    read_image,
    read_kitti_png,
    write_flo,
    write_flow_file,
    write_image,
    write_kitti_png,
    write_mask_png,
)
from pysmurf.flowkit.metrics import (
    EvalStats,
    epe,
    error_rate,
    evaluate_pair,
    format_stats_table,
    write_stats_csv,
)
from pysmurf.flowkit.viz import colorize_flow
from pysmurf.flowkit.datasets import DatasetItem, ingest_dataset

__all__ = [
    "FLO_MAGIC",
    "KITTI_OFFSET",
    "KITTI_SCALE",
    "FlowFileRecord",
    "kitti_quantize",
    "read_flo",
    "read_flow_file",
    "read_image",
    "read_kitti_png",
    "write_flo",
    "write_flow_file",
    "write_image",
    "write_kitti_png",
    "write_mask_png",
    "EvalStats",
    "epe",
    "error_rate",
    "evaluate_pair",
    "format_stats_table",
    "write_stats_csv",
    "colorize_flow",
    "DatasetItem",
    "ingest_dataset",
]
