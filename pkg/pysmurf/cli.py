"""
Command-line interface.

Exit codes:
    0  success
    1  usage error or rejected input
    2  data or format error (bad files, missing dataset)
    3  numerical failure (divergence, failed gradient or acceptance check)
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, NoReturn, Optional, Sequence

import numpy as np

from pysmurf import __version__
from pysmurf.adapters.base import LabelEntry
from pysmurf.adapters.file import FileLabelStore
from pysmurf.audit.logger import RunLogger
from pysmurf.batch.runner import AsyncBatchRunner
from pysmurf.checks.suites import AcceptanceSettings, acceptance_suite, gradient_suite
from pysmurf.config import PRESETS, RunConfig, load_config
from pysmurf.errors import DatasetError, FlowFormatError, NumericalError, RejectedInputError
from pysmurf.flowkit.datasets import DatasetItem, ingest_dataset
from pysmurf.flowkit.io import FlowFileRecord, read_flow_file, read_image, write_flow_file, write_image, write_mask_png
from pysmurf.flowkit.metrics import EvalStats, epe, evaluate_pair, format_stats_table, write_stats_csv
from pysmurf.flowkit.viz import colorize_flow
from pysmurf.objectives.objective import LossInputs, total_loss
from pysmurf.occlusion import estimate_occlusion
from pysmurf.plugins.base import EstimatorRegistry
from pysmurf.plugins.loader import PluginLoader
from pysmurf.selfsup.augment import AugmentRecord
from pysmurf.selfsup.labels import generate_multiframe_label, generate_selfsup_label, mix_label_keys
from pysmurf.solver.config import selfsup_finetune_config
from pysmurf.solver.solver import FlowSolver

logger = logging.getLogger("pysmurf.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    """Raised instead of argparse's SystemExit(2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file of 'section.field = value' lines")
    common.add_argument("--preset", choices=PRESETS, help="dataset preset (overrides the file's)")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one config value, e.g. weights.smooth=4",
    )
    common.add_argument(
        "--plugin", action="append", default=[], metavar="MODULE_OR_FILE",
        help="load occlusion estimator plugins",
    )
    common.add_argument("--audit-log", help="append JSON run events to this file")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="pysmurf", description="Unsupervised optical flow objectives and solver.")
    parser.add_argument("--version", action="version", version=f"pysmurf {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("estimate", parents=[common], help="estimate flow for an image pair")
    p.add_argument("image1")
    p.add_argument("image2")
    p.add_argument("-o", "--output", required=True, help=".flo or KITTI .png")
    p.add_argument("--viz", help="also write a color visualisation PNG")
    p.add_argument("--backward", help="also write the backward flow")
    p.add_argument("--occlusion", help="also write the final occlusion mask PNG")
    p.add_argument("--label", help="self-supervision label flow file")
    p.add_argument("--selfsup-only", action="store_true", help="fit the label alone (requires --label)")

    p = commands.add_parser("loss", parents=[common], help="evaluate the objective for a given flow")
    p.add_argument("image1")
    p.add_argument("image2")
    p.add_argument("flow")
    p.add_argument("--occlusion", help="visibility mask image (1 = visible)")
    p.add_argument("--label", help="self-supervision label flow file")

    p = commands.add_parser("occlusion", parents=[common], help="occlusion mask from forward/backward flow")
    p.add_argument("forward")
    p.add_argument("backward")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--method", help="estimator name (default from config)")

    p = commands.add_parser("labels", help="generate or mix self-supervision labels")
    label_commands = p.add_subparsers(dest="label_command", required=True)
    for name, help_text in (("twoframe", "student/teacher labels"), ("multiframe", "inpainted multi-frame labels")):
        lp = label_commands.add_parser(name, parents=[common], help=help_text)
        lp.add_argument("dataset")
        lp.add_argument("--layout", choices=("sintel", "kitti15", "flat-pairs"), default="flat-pairs")
        lp.add_argument("--pass-name", default="clean", help="Sintel pass directory")
        lp.add_argument("-o", "--output", required=True, help="label store directory")
        lp.add_argument("--limit", type=int, help="stop after this many items")
        if name == "twoframe":
            lp.add_argument("--crop", type=int, nargs=2, metavar=("H", "W"), help="student crop size")
    lp = label_commands.add_parser("mix", parents=[common], help="weighted sampling of label keys")
    lp.add_argument("stores", nargs="+", help="label store directories")
    lp.add_argument("--weight", action="append", default=[], metavar="STORE=W")
    lp.add_argument("--count", type=int, default=0, help="number of draws (default: all keys)")
    lp.add_argument("--seed", type=int, default=0)

    p = commands.add_parser("eval", parents=[common], help="evaluate against ground truth")
    p.add_argument("dataset")
    p.add_argument("--layout", choices=("sintel", "kitti15", "flat-pairs"), default="flat-pairs")
    p.add_argument("--pass-name", default="clean")
    p.add_argument("--predictions", help="directory of <key>.flo predictions (estimate when omitted)")
    p.add_argument("--csv", help="write per-item statistics as CSV")
    p.add_argument("--mode", choices=("conjunction", "disjunction"), help="error-rate rule")
    p.add_argument("--limit", type=int)

    p = commands.add_parser("viz", parents=[common], help="color-code a flow file")
    p.add_argument("flow")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-norm", type=float)

    p = commands.add_parser("gradcheck", parents=[common], help="finite-difference gradient suite")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--probes", type=int)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)

    p = commands.add_parser("selftest", parents=[common], help="synthetic acceptance suite")
    p.add_argument("--quick", action="store_true", help="smaller problems and fewer solver steps")
    p.add_argument("--seed", type=int, default=0)
    return parser


# ========================================
# HELPERS
# ========================================

def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_plugins(targets: Sequence[str]) -> None:
    loader = PluginLoader(EstimatorRegistry())
    for target in targets:
        for estimator_class in loader.load(target):
            EstimatorRegistry.register_global(estimator_class)
            logger.info("loaded occlusion estimator '%s'", estimator_class.get_config().name)


def _run_logger(config: RunConfig, args: argparse.Namespace) -> RunLogger:
    log_file = getattr(args, "audit_log", None) or config.audit_log
    return RunLogger(enabled=log_file is not None, log_file=log_file)


def _read_mask(path: str) -> np.ndarray:
    return read_image(path)[..., 0]


def _items(args: argparse.Namespace, kind: str) -> List[DatasetItem]:
    items = list(ingest_dataset(args.dataset, args.layout, kind, pass_name=args.pass_name))
    return items[:args.limit] if args.limit else items


# ========================================
# COMMANDS
# ========================================

def cmd_estimate(args: argparse.Namespace, config: RunConfig) -> int:
    image1, image2 = read_image(args.image1), read_image(args.image2)
    label = read_flow_file(args.label) if args.label else None
    solver_config = config.solver
    if args.selfsup_only:
        if label is None:
            raise RejectedInputError("--selfsup-only needs --label")
        solver_config = selfsup_finetune_config(solver_config)
    result = FlowSolver(solver_config, run_logger=_run_logger(config, args)).solve(image1, image2, label=label)
    write_flow_file(args.output, result.flow)
    if args.viz:
        write_image(args.viz, colorize_flow(result.flow))
    if args.backward:
        if result.backward is None:
            raise RejectedInputError(f"estimator '{solver_config.occlusion.method}' does not solve a backward flow")
        write_flow_file(args.backward, result.backward)
    if args.occlusion:
        write_mask_png(args.occlusion, result.occlusion)
    print(f"wrote {args.output} ({len(result.sequence)} iterates, {result.latency_ms:.0f} ms)")
    return EXIT_OK


def cmd_loss(args: argparse.Namespace, config: RunConfig) -> int:
    image1, image2 = read_image(args.image1), read_image(args.image2)
    flow = read_flow_file(args.flow).flow
    inputs = LossInputs(
        image1,
        image2,
        occlusion=_read_mask(args.occlusion) if args.occlusion else None,
        label=read_flow_file(args.label).flow if args.label else None,
    )
    breakdown = total_loss(flow, inputs, config.solver.weights, config.solver.photometric)
    if not breakdown.is_finite:
        raise NumericalError("loss is not finite")
    print(breakdown.to_lines())
    return EXIT_OK


def cmd_occlusion(args: argparse.Namespace, config: RunConfig) -> int:
    forward = read_flow_file(args.forward).flow
    backward = read_flow_file(args.backward).flow
    occ_config = config.solver.occlusion
    if args.method:
        occ_config = replace(occ_config, method=args.method)
    mask = estimate_occlusion(forward, backward, occ_config)
    write_mask_png(args.output, mask)
    print(f"occluded fraction {float((mask < 0.5).mean()):.4f}")
    return EXIT_OK


def _run_batch(config: RunConfig, run_logger: RunLogger, event: str, fn: Callable, items: List[DatasetItem]) -> list:
    with AsyncBatchRunner(config.workers, fail_fast=True, run_logger=run_logger, event=event) as runner:
        return runner.run_batch_sync(fn, items, [item.key for item in items])


def cmd_labels_twoframe(args: argparse.Namespace, config: RunConfig) -> int:
    items = _items(args, "pairs")
    store = FileLabelStore(args.output)
    crop_size = tuple(args.crop) if args.crop else None

    def make_label(item: DatasetItem) -> LabelEntry:
        image1, image2 = item.images()
        seed = config.solver.seed + item.frame
        record = AugmentRecord.sample(image1.shape[:2], config.augment, crop_size, seed=seed)
        label = generate_selfsup_label(image1, image2, FlowSolver(config.solver), record)
        return store.put(item.key, label, seed=seed, record=record.to_dict())

    outcomes = _run_batch(config, _run_logger(config, args), "label_written", make_label, items)
    print(f"wrote {len(outcomes)} two-frame labels to {args.output}")
    return EXIT_OK


def cmd_labels_multiframe(args: argparse.Namespace, config: RunConfig) -> int:
    items = _items(args, "triplets")
    store = FileLabelStore(args.output)

    def make_label(item: DatasetItem) -> LabelEntry:
        frame_prev, frame_t, frame_next = item.images()
        result = generate_multiframe_label(frame_prev, frame_t, frame_next, config.solver, config.inversion)
        return store.put(item.key, result.label, seed=config.inversion.seed)

    outcomes = _run_batch(config, _run_logger(config, args), "label_written", make_label, items)
    print(f"wrote {len(outcomes)} multi-frame labels to {args.output}")
    return EXIT_OK


def cmd_labels_mix(args: argparse.Namespace, config: RunConfig) -> int:
    sources: Dict[str, List[str]] = {}
    for root in args.stores:
        if not Path(root).is_dir():
            raise DatasetError(f"label store not found: {root}")
        sources[root] = FileLabelStore(root).keys()
    weights: Dict[str, float] = {}
    for spec in args.weight:
        name, sep, value = spec.rpartition("=")
        if not sep or name not in sources:
            raise RejectedInputError(f"--weight must name a given store as STORE=W, got '{spec}'")
        try:
            weights[name] = float(value)
        except ValueError:
            raise RejectedInputError(f"bad weight '{value}' for {name}") from None
    for source, key in mix_label_keys(sources, weights, args.count, args.seed):
        print(f"{source} {key}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    items = [item for item in _items(args, "pairs") if item.gt_path is not None]
    if not items:
        raise DatasetError(f"no ground truth found in {args.dataset}")
    mode = args.mode or config.evaluation.mode
    solver = FlowSolver(config.solver)

    def score(item: DatasetItem) -> EvalStats:
        gt = item.ground_truth()
        noc = item.noc_mask()
        if args.predictions:
            pred = read_flow_file(Path(args.predictions) / f"{item.key}.flo").flow
            return epe(pred, gt, noc, mode)
        image1, image2 = item.images()
        _, stats = evaluate_pair(
            image1, image2, gt, lambda a, b: solver.solve(a, b).flow,
            config.evaluation.working_size, noc, mode,
        )
        return stats

    outcomes = _run_batch(config, _run_logger(config, args), "eval_item", score, items)
    rows = [(o.key, o.value) for o in outcomes]
    rows.append(("mean", EvalStats.mean([stats for _, stats in rows])))
    print(format_stats_table(rows))
    if args.csv:
        write_stats_csv(args.csv, rows)
    return EXIT_OK


def cmd_viz(args: argparse.Namespace, config: RunConfig) -> int:
    record: FlowFileRecord = read_flow_file(args.flow)
    image = colorize_flow(record.flow, args.max_norm) * record.valid[..., None]
    write_image(args.output, image)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace, config: RunConfig) -> int:
    report = gradient_suite(
        args.instances, args.size, args.tolerance, args.probes, args.seed, _run_logger(config, args)
    )
    print(report.to_lines())
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_selftest(args: argparse.Namespace, config: RunConfig) -> int:
    if args.quick:
        settings = AcceptanceSettings.quick()
    else:
        settings = AcceptanceSettings(solver=config.solver, inversion=config.inversion)
    report = acceptance_suite(settings, args.seed, _run_logger(config, args))
    print(report.to_lines())
    return EXIT_OK if report.passed else EXIT_NUMERICAL


COMMANDS = {
    "estimate": cmd_estimate,
    "loss": cmd_loss,
    "occlusion": cmd_occlusion,
    "twoframe": cmd_labels_twoframe,
    "multiframe": cmd_labels_multiframe,
    "mix": cmd_labels_mix,
    "eval": cmd_eval,
    "viz": cmd_viz,
    "gradcheck": cmd_gradcheck,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _configure_logging(args.verbose)
        _load_plugins(args.plugin)
        config = load_config(args.config, args.overrides, args.preset)
        command = args.label_command if args.command == "labels" else args.command
        return COMMANDS[command](args, config)
    except (UsageError, RejectedInputError, ImportError) as e:
        print(f"pysmurf: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FlowFormatError, DatasetError, OSError) as e:
        print(f"pysmurf: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"pysmurf: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
