"""
Finite-difference checks of the analytic loss gradients.
"""

import numpy as np
import pytest

from pysmurf.checks import gradient_suite
from pysmurf.checks.suites import kink_free_flow
from pysmurf.checks.synthetic import textured_noise
from pysmurf.fields import CropWindow, finite_difference_check
from pysmurf.objectives import LossInputs, LossWeights, Objective, PhotometricConfig, smoothness_loss


class TestGradientSuite:
    """Tests for the gradient suite on small instances."""

    @pytest.fixture(scope="class")
    def report(self):
        return gradient_suite(instances=2, size=10, probes=40, seed=11)

    def test_every_loss_checked(self, report):
        """The suite covers all four gradients."""
        assert [c.name for c in report.checks] == [
            "grad_photometric",
            "grad_smoothness_k1",
            "grad_smoothness_k2",
            "grad_self_supervision",
        ]

    @pytest.mark.parametrize("name", [
        "grad_photometric",
        "grad_smoothness_k1",
        "grad_smoothness_k2",
        "grad_self_supervision",
    ])
    def test_gradient_matches(self, report, name):
        """Analytic and central-difference gradients agree to 1e-4."""
        check = report.get(name)
        assert check.passed, check.to_line()
        assert check.value < 1e-4

    def test_report_lines(self, report):
        """to_lines ends with the pass count."""
        assert report.to_lines().splitlines()[-1] == "4/4 checks passed"


class TestKinkFreeFlow:
    """Tests for the smoothness test-flow generator."""

    @pytest.mark.parametrize("order", [1, 2])
    def test_differences_stay_away_from_zero(self, rng, order):
        """k-th differences are bounded away from 0 in both directions."""
        flow = kink_free_flow(12, order, rng)
        dx = np.diff(flow, n=order, axis=1)
        dy = np.diff(flow, n=order, axis=0)
        assert np.abs(dx).min() > 0.1
        assert np.abs(dy).min() > 0.1


class TestObjectiveGradient:
    """The weighted total gradient is the derivative of the total."""

    def test_total_gradient(self, rng):
        """Full objective with a crop, occlusion and label passes the check."""
        size = 8
        full = textured_noise(size + 4, size + 4, seed=21)
        image2 = textured_noise(size + 4, size + 4, seed=22)
        crop = CropWindow(2, 2, size, size, size + 4, size + 4)
        label = rng.normal(0.0, 2.0, (size, size, 2))
        inputs = LossInputs(
            crop.apply(full),
            image2,
            crop=crop,
            occlusion=rng.uniform(0.2, 1.0, (size, size)),
            label=label,
        )
        # smoothness and Charbonnier kinks are avoided by choosing the point
        bound = Objective(LossWeights(smoothness_order=1), PhotometricConfig()).bind(inputs)
        point = kink_free_flow(size, 1, rng) * 0.1 + 0.35
        point = np.where(np.abs(point - label) < 0.2, point + 0.5, point)

        def loss(flow):
            breakdown = bound.evaluate(flow)
            return breakdown.total, breakdown.gradient

        report = finite_difference_check(loss, point, probes=48, seed=3)
        assert report.passed, report.to_dict()

    def test_smoothness_gradient_second_order(self, rng):
        """Second-order smoothness passes directly."""
        image = textured_noise(9, 9, seed=5)
        report = finite_difference_check(
            lambda f: smoothness_loss(image, f, order=2), kink_free_flow(9, 2, rng)
        )
        assert report.passed
