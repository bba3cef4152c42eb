"""
Gradient and acceptance suites behind ``pysmurf gradcheck`` and
``pysmurf selftest``.

Every check returns a CheckResult; a suite collects them in order.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from pysmurf.audit.logger import RunLogger
from pysmurf.checks.synthetic import (
    constant_velocity_triplet,
    crop_scene,
    exiting_strip_triplet,
    moving_square,
    textured_noise,
    translated_pair,
)
from pysmurf.fields.gradcheck import finite_difference_check
from pysmurf.fields.types import CropWindow, pixel_grid
from pysmurf.flowkit.io import FlowFileRecord, read_flo, read_kitti_png, write_flo, write_kitti_png
from pysmurf.flowkit.metrics import epe, error_rate
from pysmurf.objectives.breakdown import LossBreakdown
from pysmurf.objectives.config import LossWeights, PhotometricConfig
from pysmurf.objectives.objective import LossInputs, total_loss
from pysmurf.objectives.photometric import photometric_loss
from pysmurf.objectives.sequence import sequence_weights
from pysmurf.objectives.smoothness import smoothness_loss
from pysmurf.objectives.supervision import self_supervision_loss
from pysmurf.occlusion.estimators import occlusion_from_fb_consistency, occlusion_from_range_map
from pysmurf.selfsup.augment import AugmentRecord, augment_pair
from pysmurf.selfsup.inversion import InversionTrainingConfig, TinyInversionModel, fit_inversion_model
from pysmurf.selfsup.labels import generate_multiframe_label, generate_selfsup_label
from pysmurf.solver.config import SolverConfig
from pysmurf.solver.solver import FlowSolver
from pysmurf.utils.hashing import array_digest

logger = logging.getLogger("pysmurf.checks")

Outcome = Tuple[float, bool, Dict[str, Any]]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check."""
    name: str
    passed: bool
    value: float
    threshold: float
    details: Dict[str, Any] = field(default_factory=dict, compare=False)
    latency_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "latency_ms": round(self.latency_ms, 1),
            **self.details,
        }

    def to_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} value={self.value:.6g} threshold={self.threshold:.6g}"


@dataclass(frozen=True)
class SuiteReport:
    """Ordered check results."""
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> Optional[CheckResult]:
        return next((c for c in self.checks if c.name == name), None)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def to_lines(self) -> str:
        lines = [c.to_line() for c in self.checks]
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def _timed(name: str, threshold: float, fn: Callable[[], Outcome]) -> CheckResult:
    start = time.perf_counter()
    value, passed, details = fn()
    return CheckResult(name, bool(passed), float(value), threshold, details, (time.perf_counter() - start) * 1000)


# ========================================
# GRADIENT SUITE
# ========================================

def kink_free_flow(size: int, order: int, rng: np.random.Generator) -> np.ndarray:
    """
    A flow whose k-th differences stay away from zero in both directions,
    so |d^k V| is differentiable at every probe.
    """
    xs, ys = pixel_grid(size, size)
    channels = []
    for a, b in ((1.0, 0.7), (0.8, 0.6)):
        if order == 1:
            base = a * xs + b * ys
            noise = rng.uniform(-0.1, 0.1, (size, size))
        else:
            base = 0.5 * a * xs ** 2 + 0.5 * b * ys ** 2
            noise = rng.uniform(-0.05, 0.05, (size, size))
        channels.append(base + noise)
    return np.stack(channels, axis=-1)


def _photometric_instance(size: int, seed: int) -> Tuple[Callable, np.ndarray]:
    rng = np.random.default_rng(seed)
    full = size + 4
    image1_full = textured_noise(full, full, seed=seed)
    image2 = textured_noise(full, full, seed=seed + 7919)
    crop = CropWindow(2, 2, size, size, full, full)
    occlusion = rng.uniform(0.2, 1.0, (size, size))
    # fractional flows keep every target off the bilinear lattice
    flow = rng.uniform(0.1, 0.9, (size, size, 2)) * rng.choice([-1.0, 1.0], (size, size, 2))

    def fn(f: np.ndarray) -> Tuple[float, np.ndarray]:
        return photometric_loss(crop.apply(image1_full), image2, crop, f, occlusion)

    return fn, flow


def _smoothness_instance(size: int, seed: int, order: int) -> Tuple[Callable, np.ndarray]:
    rng = np.random.default_rng(seed)
    image = textured_noise(size, size, seed=seed)
    return (lambda f: smoothness_loss(image, f, order=order)), kink_free_flow(size, order, rng)


def _selfsup_instance(size: int, seed: int) -> Tuple[Callable, np.ndarray]:
    rng = np.random.default_rng(seed)
    teacher = rng.normal(0.0, 2.0, (size, size, 2))
    masks = (rng.uniform(0.2, 0.8, (size, size)), rng.uniform(0.2, 0.8, (size, size)))
    # residuals stay clear of the Charbonnier bend at zero
    student = teacher + rng.uniform(0.2, 2.0, teacher.shape) * rng.choice([-1.0, 1.0], teacher.shape)
    return (lambda f: self_supervision_loss(teacher, f, masks)), student


def gradient_suite(
    instances: int = 20,
    size: int = 16,
    tolerance: float = 1e-4,
    probes: Optional[int] = None,
    seed: int = 0,
    run_logger: Optional[RunLogger] = None,
) -> SuiteReport:
    """
    Finite-difference check of every loss gradient on random instances.

    Args:
        instances: random instances per loss
        size: instance height and width
        tolerance: max relative error allowed
        probes: elements probed per instance (all when None)
        seed: base seed
    """
    builders = {
        "grad_photometric": _photometric_instance,
        "grad_smoothness_k1": lambda s, sd: _smoothness_instance(s, sd, 1),
        "grad_smoothness_k2": lambda s, sd: _smoothness_instance(s, sd, 2),
        "grad_self_supervision": _selfsup_instance,
    }
    checks = []
    for name, build in builders.items():
        def run(build: Callable = build) -> Outcome:
            worst, worst_seed = 0.0, seed
            for i in range(instances):
                fn, point = build(size, seed + i)
                report = finite_difference_check(fn, point, tolerance=tolerance, probes=probes, seed=seed + i)
                if report.max_relative_error >= worst:
                    worst, worst_seed = report.max_relative_error, seed + i
            return worst, worst < tolerance, {"instances": instances, "worst_seed": worst_seed}

        result = _timed(name, tolerance, run)
        logger.info(result.to_line())
        if run_logger is not None:
            run_logger.log("gradcheck", result)
        checks.append(result)
    return SuiteReport(tuple(checks))


# ========================================
# ACCEPTANCE SUITE
# ========================================

@dataclass(frozen=True)
class AcceptanceSettings:
    """Problem sizes for the acceptance suite; ``quick`` shrinks everything."""
    pairs: int = 10
    size: int = 64
    max_shift: float = 4.0
    crop_scenes: int = 10
    gradient_instances: int = 20
    gradient_probes: Optional[int] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    solver_border_check: bool = True
    inversion: InversionTrainingConfig = field(default_factory=InversionTrainingConfig)
    inpainting_tolerance: float = 1.0

    @classmethod
    def quick(cls) -> "AcceptanceSettings":
        return cls(
            pairs=2,
            crop_scenes=3,
            gradient_instances=3,
            gradient_probes=64,
            solver=SolverConfig(steps=(100, 100, 150)),
            solver_border_check=False,
        )


def _interior(array: np.ndarray, margin: int) -> np.ndarray:
    return array[margin:-margin, margin:-margin]


def _mean_epe(pred: np.ndarray, gt: np.ndarray) -> float:
    return float(np.sqrt(np.sum((pred - gt) ** 2, axis=-1)).mean())


def check_translation_oracle(settings: AcceptanceSettings, seed: int = 0) -> CheckResult:
    def run() -> Outcome:
        rng = np.random.default_rng(seed)
        solver = FlowSolver(settings.solver)
        errors = []
        for i in range(settings.pairs):
            shift = tuple(float(s) for s in rng.uniform(-settings.max_shift, settings.max_shift, 2))
            pair = translated_pair(settings.size, settings.size, shift, seed=seed + i)
            flow = solver.solve(pair.image1, pair.image2).flow
            errors.append(_mean_epe(_interior(flow, 8), _interior(pair.flow, 8)))
        return max(errors), max(errors) < 0.5, {"epe_per_pair": errors}

    return _timed("translation_oracle", 0.5, run)


def check_full_image_warping(settings: AcceptanceSettings, seed: int = 0) -> CheckResult:
    def run() -> Outcome:
        rng = np.random.default_rng(seed + 1)
        wins = 0
        border_full, border_crop = [], []
        for i in range(settings.crop_scenes):
            shift = tuple(float(s) for s in rng.uniform(2.0, 4.0, 2) * rng.choice([-1.0, 1.0], 2))
            scene = crop_scene(48, 48, (32, 32), shift, seed=seed + 100 + i)
            crop = scene.crop
            full_loss, _ = photometric_loss(scene.image1_crop, scene.image2, crop, scene.flow)
            crop_only, _ = photometric_loss(
                scene.image1_crop, crop.apply(scene.image2), CropWindow.full(*crop.shape), scene.flow
            )
            wins += int(full_loss < crop_only)
            if settings.solver_border_check:
                ring = np.ones(crop.shape, dtype=bool)
                ring[3:-3, 3:-3] = False
                for warping, bucket in ((True, border_full), (False, border_crop)):
                    config = replace(
                        settings.solver,
                        photometric=replace(settings.solver.photometric, full_image_warping=warping),
                    )
                    flow = FlowSolver(config).solve(scene.image1, scene.image2, crop=crop).flow
                    bucket.append(_mean_epe(flow[ring], scene.flow[ring]))
        details: Dict[str, Any] = {"loss_wins": wins, "scenes": settings.crop_scenes}
        passed = wins == settings.crop_scenes
        if settings.solver_border_check:
            improvement = 1.0 - float(np.mean(border_full)) / max(float(np.mean(border_crop)), 1e-12)
            details["border_improvement"] = improvement
            passed = passed and improvement >= 0.25
        return wins / settings.crop_scenes, passed, details

    return _timed("full_image_warping", 1.0, run)


def check_inversion_training(seed: int = 0) -> CheckResult:
    """A fresh inversion model learns the constant-velocity case to < 0.05 px."""
    def run() -> Outcome:
        triplet = constant_velocity_triplet(24, 24, (3.0, 0.0), seed=seed + 200)
        visible = triplet.visible >= 0.5
        config = InversionTrainingConfig(seed=seed)
        fresh = TinyInversionModel.initialize(config.seed)
        initial_epe = _mean_epe(fresh.predict(triplet.backward)[visible], triplet.forward[visible])
        model, losses = fit_inversion_model(triplet.backward, triplet.forward, triplet.visible, config)
        train_epe = _mean_epe(model.predict(triplet.backward)[visible], triplet.forward[visible])
        return train_epe, train_epe < 0.05 <= initial_epe, {
            "initial_epe": initial_epe,
            "initial_loss": losses[0],
            "final_loss": losses[-1],
        }

    return _timed("inversion_training", 0.05, run)


def check_multiframe_inpainting(settings: Optional[AcceptanceSettings] = None, seed: int = 0) -> CheckResult:
    """
    End to end on a strip leaving the frame: solve both directions, estimate
    occlusion, train the inversion model and inpaint. Inside the truly
    out-of-frame pixels the label must halve the solver's raw forward error,
    or stay within ``inpainting_tolerance`` when the raw error is already
    that small.
    """
    settings = settings or AcceptanceSettings()

    def run() -> Outcome:
        triplet = exiting_strip_triplet(seed=seed + 200)
        result = generate_multiframe_label(
            triplet.frame_prev, triplet.frame_t, triplet.frame_next, settings.solver, settings.inversion
        )
        occluded = triplet.visible < 0.5
        raw_epe = _mean_epe(result.forward[occluded], triplet.forward[occluded])
        label_epe = _mean_epe(result.label.flow[occluded], triplet.forward[occluded])
        bound = max(0.5 * raw_epe, settings.inpainting_tolerance)
        return label_epe, label_epe <= bound, {
            "raw_epe": raw_epe,
            "bound": bound,
            "occlusion_recall": float(np.mean(result.occlusion[occluded] < 0.5)),
            "inpainted_fraction": result.label.metadata["inpainted_fraction"],
        }

    return _timed("multiframe_inpainting", settings.inpainting_tolerance, run)


def check_loss_identities(seed: int = 0) -> CheckResult:
    def run() -> Outcome:
        rng = np.random.default_rng(seed + 300)
        failures = []

        weight_sum = float(sequence_weights(12, 0.8).sum())
        if abs(weight_sum - (1.0 - 0.8 ** 12) / 0.2) > 1e-12:
            failures.append("sequence_weights")

        image1 = textured_noise(16, 16, seed=seed + 301)
        image2 = textured_noise(16, 16, seed=seed + 302)
        flow = rng.normal(0.0, 1.0, (16, 16, 2))
        breakdown = total_loss(flow, LossInputs(image1, image2, label=rng.normal(0.0, 1.0, (16, 16, 2))))
        recombined = LossBreakdown.weighted_total(
            breakdown.photometric, breakdown.smoothness, breakdown.self_supervision, breakdown.weights
        )
        if recombined != breakdown.total:
            failures.append("breakdown_recombination")

        xs, ys = pixel_grid(16, 16)
        constant = np.full((16, 16, 2), 1.5)
        linear = np.stack([2.0 * xs + 3.0 * ys + 1.0, -xs + 4.0 * ys], axis=-1)
        if smoothness_loss(image1, constant, order=1)[0] > 1e-12:
            failures.append("smoothness_k1_constant")
        if smoothness_loss(image1, linear, order=2)[0] > 1e-12:
            failures.append("smoothness_k2_linear")

        zero = np.zeros((16, 16, 2))
        crop = CropWindow.full(16, 16)
        base, _ = photometric_loss(image1, image2, crop, zero)
        shifted, _ = photometric_loss(image1 + 0.05, image2 + 0.05, crop, zero)
        offset_error = abs(base - shifted)
        if offset_error > 1e-10:
            failures.append("census_offset_invariance")
        return float(len(failures)), not failures, {"failures": failures, "offset_error": offset_error}

    return _timed("loss_identities", 0.0, run)


def _precision_recall(predicted_visible: np.ndarray, visible: np.ndarray) -> Tuple[float, float]:
    predicted = predicted_visible < 0.5
    truth = visible < 0.5
    hits = float(np.sum(predicted & truth))
    precision = hits / max(float(predicted.sum()), 1.0)
    recall = hits / max(float(truth.sum()), 1.0)
    return precision, recall


def check_occlusion_estimators(seed: int = 0) -> CheckResult:
    def run() -> Outcome:
        scores = []
        for shift in ((3, 0), (0, 3), (-2, 2), (2, -3)):
            forward, backward, visible, _ = moving_square(32, 10, shift)
            for estimate in (
                occlusion_from_fb_consistency(forward, backward),
                occlusion_from_range_map(backward),
            ):
                scores.extend(_precision_recall(estimate, visible))

        constant = np.broadcast_to(np.array([2.0, -1.0]), (24, 24, 2)).copy()
        all_visible = bool(np.all(occlusion_from_fb_consistency(constant, -constant) == 1.0))
        xs, ys = pixel_grid(24, 24)
        in_frame = (xs + 2.0 <= 23) & (ys - 1.0 >= 0)
        range_ok = bool(np.all(occlusion_from_range_map(-constant)[in_frame] == 1.0))
        worst = min(scores)
        return worst, worst >= 0.9 and all_visible and range_ok, {
            "inverse_all_visible": all_visible,
            "range_map_in_frame_visible": range_ok,
        }

    return _timed("occlusion_estimators", 0.9, run)


def check_metrics_and_formats(seed: int = 0) -> CheckResult:
    def run() -> Outcome:
        rng = np.random.default_rng(seed + 400)
        failures = []

        pred = rng.normal(0.0, 3.0, (8, 8, 2))
        gt = rng.normal(0.0, 3.0, (8, 8, 2))
        valid = (rng.uniform(size=(8, 8)) > 0.3).astype(np.float64)
        record = FlowFileRecord(gt, valid)
        errors, outliers = [], []
        for y in range(8):
            for x in range(8):
                if valid[y, x]:
                    e = float(np.hypot(*(pred[y, x] - gt[y, x])))
                    errors.append(e)
                    outliers.append(e > 3.0 and e > 0.05 * float(np.hypot(*gt[y, x])))
        stats = epe(pred, record)
        if abs(stats.epe - np.mean(errors)) > 1e-10:
            failures.append("epe_oracle")
        if abs(stats.error_rate - 100.0 * np.mean(outliers)) > 1e-10:
            failures.append("error_rate_oracle")

        gt_zero = np.zeros((4, 4, 2))
        if epe(gt_zero + np.array([3.0, 4.0]), gt_zero).epe != 5.0:
            failures.append("epe_345")

        long_gt = np.broadcast_to(np.array([100.0, 0.0]), (2, 2, 2)).copy()
        off_by_five = long_gt + np.array([0.0, 5.0])
        if error_rate(off_by_five, long_gt, "conjunction") != 0.0:
            failures.append("er_conjunction")
        if error_rate(off_by_five, long_gt, "disjunction") != 100.0:
            failures.append("er_disjunction")

        flow = rng.normal(0.0, 10.0, (6, 5, 2)).astype(np.float32).astype(np.float64)
        if not np.array_equal(read_flo(write_flo(flow)).flow, flow):
            failures.append("flo_roundtrip")
        decoded = read_kitti_png(write_kitti_png(FlowFileRecord(flow, np.ones((6, 5)))))
        if np.max(np.abs(decoded.flow - flow)) > 1.0 / 64.0:
            failures.append("kitti_roundtrip")
        return float(len(failures)), not failures, {"failures": failures}

    return _timed("metrics_and_formats", 0.0, run)


def check_determinism(seed: int = 0) -> CheckResult:
    def run() -> Outcome:
        pair = translated_pair(24, 24, (1.5, -1.0), seed=seed + 500)
        config = SolverConfig(levels=2, steps=(30, 30), seed=seed)
        flows = [FlowSolver(config).solve(pair.image1, pair.image2).flow for _ in range(2)]
        same_flow = array_digest(flows[0]) == array_digest(flows[1])

        records = [AugmentRecord.sample((24, 24), crop_size=(16, 16), seed=seed + 501) for _ in range(2)]
        same_record = records[0].to_dict() == records[1].to_dict()
        replays = [augment_pair(pair.image1, pair.image2, r).inputs for r in records]
        same_replay = all(array_digest(a) == array_digest(b) for a, b in zip(*replays))

        labels = [
            generate_selfsup_label(pair.image1, pair.image2, FlowSolver(config), records[0]) for _ in range(2)
        ]
        same_label = array_digest(labels[0].flow) == array_digest(labels[1].flow)
        checks = {"estimate": same_flow, "record": same_record, "replay": same_replay, "labels": same_label}
        return float(sum(not v for v in checks.values())), all(checks.values()), checks

    return _timed("determinism", 0.0, run)


def acceptance_suite(
    settings: Optional[AcceptanceSettings] = None,
    seed: int = 0,
    run_logger: Optional[RunLogger] = None,
) -> SuiteReport:
    """
    Run the synthetic acceptance checks in a fixed order.
    """
    settings = settings or AcceptanceSettings()
    gradients = gradient_suite(
        settings.gradient_instances, probes=settings.gradient_probes, seed=seed, run_logger=run_logger
    )
    checks = list(gradients.checks)
    for check in (
        lambda: check_translation_oracle(settings, seed),
        lambda: check_full_image_warping(settings, seed),
        lambda: check_multiframe_inpainting(settings, seed),
        lambda: check_inversion_training(seed),
        lambda: check_loss_identities(seed),
        lambda: check_occlusion_estimators(seed),
        lambda: check_metrics_and_formats(seed),
        lambda: check_determinism(seed),
    ):
        result = check()
        logger.info(result.to_line())
        if run_logger is not None:
            run_logger.log("selftest_check", result)
        checks.append(result)
    return SuiteReport(tuple(checks))
