"""
Tests for the synthetic scenes and the acceptance checks.
"""

import numpy as np
import pytest

from pysmurf.checks import (
    AcceptanceSettings,
    CheckResult,
    SuiteReport,
    acceptance_suite,
    check_determinism,
    check_full_image_warping,
    check_inversion_training,
    check_loss_identities,
    check_metrics_and_formats,
    check_multiframe_inpainting,
    check_occlusion_estimators,
    crop_scene,
    exiting_strip_triplet,
    moving_square,
    translated_pair,
)
from pysmurf.errors import RejectedInputError
from pysmurf.utils.hashing import array_digest


class TestSyntheticScenes:
    """Tests for the scene generators."""

    def test_translated_pair_flow(self):
        """The ground truth is the constant translation."""
        pair = translated_pair(16, 16, (2.0, -1.0), seed=1)
        np.testing.assert_array_equal(pair.flow[..., 0], 2.0)
        np.testing.assert_array_equal(pair.flow[..., 1], -1.0)
        assert pair.image1.shape == pair.image2.shape == (16, 16, 3)

    def test_crop_scene_shapes(self):
        """The crop lives inside the full frame."""
        scene = crop_scene(40, 40, (24, 24), (3.0, -2.0), seed=2)
        assert scene.crop.full_shape == (40, 40)
        assert scene.image1_crop.shape == (24, 24, 3)
        assert scene.flow.shape == (24, 24, 2)

    def test_moving_square_has_occlusion(self):
        """A moving square uncovers some background."""
        _, _, visible, _ = moving_square(32, 10, (3, 0))
        assert 0 < int((visible < 0.5).sum()) < 32 * 32

    def test_exiting_strip_frames_follow_flow(self):
        """Strip pixels move by the forward flow and came from the backward flow."""
        triplet = exiting_strip_triplet(40, 40, speed=4, rows=(16, 24), left=12, seed=3)
        for x in range(12, 36):
            np.testing.assert_array_equal(triplet.frame_next[16:24, x + 4], triplet.frame_t[16:24, x])
        for x in range(12, 40):
            np.testing.assert_array_equal(triplet.frame_prev[16:24, x - 4], triplet.frame_t[16:24, x])
        np.testing.assert_array_equal(triplet.frame_t[:16], triplet.frame_next[:16])
        np.testing.assert_array_equal(triplet.backward, -triplet.forward)

    def test_exiting_strip_occludes_only_leaving_columns(self):
        """Only the strip's last columns leave the frame."""
        triplet = exiting_strip_triplet(40, 40, speed=4, rows=(16, 24), left=12)
        occluded = triplet.visible < 0.5
        assert int(occluded.sum()) == 8 * 4
        assert occluded[16:24, 36:].all()
        np.testing.assert_array_equal(triplet.forward[20, 36], [4.0, 0.0])

    def test_exiting_strip_validation(self):
        """The strip must fit and keep visible columns."""
        with pytest.raises(RejectedInputError):
            exiting_strip_triplet(40, 40, rows=(30, 50))
        with pytest.raises(RejectedInputError):
            exiting_strip_triplet(40, 40, speed=4, left=38)


class TestDigest:
    """Tests for array digests."""

    def test_equal_arrays_share_digest(self):
        """Bit-identical arrays hash alike."""
        assert array_digest(np.arange(6.0)) == array_digest(np.arange(6.0))

    def test_shape_and_dtype_matter(self):
        """Same bytes with another shape or dtype hash differently."""
        base = np.arange(6.0)
        assert array_digest(base) != array_digest(base.reshape(2, 3))
        assert array_digest(np.zeros(2, np.float32)) != array_digest(np.zeros(1, np.float64))

    def test_utils_package_exports(self):
        """The utils package imports cleanly and re-exports the digest."""
        import pysmurf.utils as utils

        assert utils.__all__ == ["array_digest"]
        assert utils.array_digest is array_digest


class TestReports:
    """Tests for check results and reports."""

    def test_lines(self):
        """to_lines lists each check and the pass count."""
        report = SuiteReport((
            CheckResult("a", True, 0.0, 1.0),
            CheckResult("b", False, 2.0, 1.0),
        ))
        lines = report.to_lines().splitlines()
        assert lines[0].startswith("PASS")
        assert lines[1].startswith("FAIL")
        assert lines[-1] == "1/2 checks passed"
        assert not report.passed
        assert [c.name for c in report.failures] == ["b"]
        assert report.get("missing") is None


class TestAcceptanceChecks:
    """The cheaper acceptance checks pass on their own."""

    @pytest.mark.parametrize("check", [
        check_loss_identities,
        check_occlusion_estimators,
        check_metrics_and_formats,
        check_determinism,
    ])
    def test_check_passes(self, check):
        """Each check reports success."""
        result = check(seed=0)
        assert result.passed, result.to_dict()

    def test_full_image_warping_loss(self):
        """Full-image warping lowers the loss at the true flow in every scene."""
        settings = AcceptanceSettings(crop_scenes=4, solver_border_check=False)
        result = check_full_image_warping(settings, seed=0)
        assert result.passed, result.to_dict()
        assert result.value == 1.0

    def test_inversion_training(self):
        """The inversion model is fitted by training from a zero-output start."""
        result = check_inversion_training(seed=1)
        assert result.passed, result.to_dict()
        assert result.details["final_loss"] < result.details["initial_loss"]

    @pytest.mark.slow
    def test_multiframe_inpainting_end_to_end(self):
        """Inpainted labels beat the solver's own forward flow where the strip leaves."""
        result = check_multiframe_inpainting(AcceptanceSettings.quick(), seed=0)
        assert result.passed, result.to_dict()

    @pytest.mark.slow
    def test_quick_suite(self):
        """The quick acceptance suite passes end to end."""
        report = acceptance_suite(AcceptanceSettings.quick(), seed=0)
        assert report.passed, report.to_lines()
