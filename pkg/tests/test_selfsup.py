"""
Tests for augmentation records, labels, the inversion model and label mixing.
"""

import numpy as np
import pytest

from pysmurf.checks import check_inversion_training, constant_velocity_triplet, exiting_strip_triplet
from pysmurf.errors import RejectedInputError
from pysmurf.fields import CropWindow, finite_difference_check
from pysmurf.selfsup import (
    AugmentConfig,
    AugmentRecord,
    InversionTrainingConfig,
    SelfSupLabel,
    TinyInversionModel,
    augment_pair,
    coordinate_channels,
    erase_regions,
    fit_inversion_model,
    geometric_augment,
    generate_multiframe_label,
    generate_selfsup_label,
    geometric_frame,
    inpaint_occluded_flow,
    inversion_loss,
    mix_label_keys,
    photometric_augment,
    run_student_teacher,
    transform_flow_label,
)
from pysmurf.solver import FlowSequence, SolverConfig

TINY = SolverConfig(steps=(3, 3, 3))


def _constant_flow(height, width, u, v):
    return np.broadcast_to(np.array([u, v], dtype=np.float64), (height, width, 2)).copy()


# ============================================================
# LABEL TYPE
# ============================================================

class TestSelfSupLabel:
    """Tests for the frozen label type."""

    def test_arrays_are_read_only(self):
        """Labels cannot be edited in place."""
        label = SelfSupLabel.create(np.zeros((3, 3, 2)))
        assert not label.flow.flags.writeable
        assert not label.valid.flags.writeable
        with pytest.raises(ValueError):
            label.flow[0, 0, 0] = 1.0

    def test_source_array_copied(self):
        """Changing the source array does not change the label."""
        flow = np.zeros((3, 3, 2))
        label = SelfSupLabel.create(flow)
        flow[0, 0, 0] = 5.0
        assert label.flow[0, 0, 0] == 0.0

    def test_create_is_fully_valid(self):
        """create marks every pixel valid and keeps metadata."""
        label = SelfSupLabel.create(np.zeros((2, 4, 2)), "multi_frame", origin="test")
        np.testing.assert_array_equal(label.valid, 1.0)
        assert label.shape == (2, 4)
        assert label.to_dict()["origin"] == "test"

    def test_unknown_provenance(self):
        """Only two_frame and multi_frame exist."""
        with pytest.raises(RejectedInputError):
            SelfSupLabel(np.zeros((2, 2, 2)), np.ones((2, 2)), "teacher")


# ============================================================
# AUGMENTATION
# ============================================================

class TestAugmentRecord:
    """Tests for drawing and replaying augmentation records."""

    def test_same_seed_same_record(self):
        """Records are a pure function of the seed."""
        assert AugmentRecord.sample((20, 24), crop_size=(16, 16), seed=3) == AugmentRecord.sample(
            (20, 24), crop_size=(16, 16), seed=3
        )

    def test_crop_always_fits(self):
        """Scales are raised so the requested crop fits."""
        config = AugmentConfig(scale_range=(0.5, 0.5))
        for seed in range(10):
            record = AugmentRecord.sample((20, 24), config, crop_size=(18, 22), seed=seed)
            assert record.crop.shape == (18, 22)
            assert record.crop.full_shape == record.scaled_shape

    def test_dict_form(self):
        """from_dict rebuilds an equal record."""
        record = AugmentRecord.sample((20, 24), crop_size=(16, 16), seed=8)
        assert AugmentRecord.from_dict(record.to_dict()) == record

    def test_identity(self):
        """The identity record changes nothing."""
        record = AugmentRecord.identity(6, 7)
        assert record.is_geometric_identity
        assert record.crop == CropWindow.full(6, 7)

    def test_rect_outside_crop_rejected(self):
        """Eraser rects must lie inside the crop."""
        with pytest.raises(RejectedInputError):
            AugmentRecord(8, 8, CropWindow.full(8, 8), erase_rects=((6, 0, 2, 4),))

    def test_crop_frame_must_match_scale(self):
        """The crop's frame is the scaled frame."""
        with pytest.raises(RejectedInputError):
            AugmentRecord(8, 8, CropWindow.full(8, 8), scale_x=2.0, scale_y=2.0)

    def test_bad_config(self):
        """Invalid ranges are rejected."""
        with pytest.raises(RejectedInputError):
            AugmentConfig(scale_range=(1.2, 0.8))
        with pytest.raises(RejectedInputError):
            AugmentConfig(flip_lr_prob=1.5)


class TestAugmentation:
    """Tests for the image and label transforms."""

    def test_identity_record_keeps_images(self, texture):
        """augment_pair with the identity record returns the inputs."""
        image1, image2 = texture(8, 8, seed=1), texture(8, 8, seed=2)
        pair = augment_pair(image1, image2, AugmentRecord.identity(8, 8))
        np.testing.assert_allclose(pair.inputs[0], image1)
        np.testing.assert_allclose(pair.inputs[1], image2)
        np.testing.assert_allclose(pair.clean[0], image1)

    def test_brightness_gain(self):
        """Brightness multiplies and clamps."""
        record = AugmentRecord(2, 2, CropWindow.full(2, 2), brightness=1.5)
        out = photometric_augment(np.array([[0.2, 0.8], [0.4, 0.6]]), record)
        np.testing.assert_allclose(out[..., 0], [[0.3, 1.0], [0.6, 0.9]])

    def test_eraser_fills_mean(self, texture):
        """Erased rects hold the image mean colour."""
        image = texture(8, 8)
        out = erase_regions(image, [(1, 2, 3, 2)])
        np.testing.assert_allclose(out[2:5, 1:3], np.broadcast_to(image.reshape(-1, 3).mean(axis=0), (3, 2, 3)))
        np.testing.assert_array_equal(out[0], image[0])

    def test_eraser_only_touches_second_image(self, texture):
        """The first image and the clean pair never see the eraser."""
        image1, image2 = texture(8, 8, seed=1), texture(8, 8, seed=2)
        record = AugmentRecord(8, 8, CropWindow.full(8, 8), erase_rects=((0, 0, 2, 2),))
        pair = augment_pair(image1, image2, record)
        np.testing.assert_allclose(pair.inputs[0], image1)
        np.testing.assert_allclose(pair.clean[1], image2)
        assert not np.allclose(pair.inputs[1][:2, :2], image2[:2, :2])

    def test_flip_negates_flow_component(self):
        """A horizontal flip negates u, a vertical flip negates v."""
        flow = _constant_flow(6, 6, 1.0, 2.0)
        lr = transform_flow_label(flow, AugmentRecord(6, 6, CropWindow.full(6, 6), flip_lr=True))
        ud = transform_flow_label(flow, AugmentRecord(6, 6, CropWindow.full(6, 6), flip_ud=True))
        np.testing.assert_allclose(lr.flow[..., 0], -1.0)
        np.testing.assert_allclose(lr.flow[..., 1], 2.0)
        np.testing.assert_allclose(ud.flow[..., 1], -2.0)

    def test_scale_multiplies_flow(self):
        """Scaling the frame scales the vectors by the realised ratio."""
        flow = _constant_flow(6, 8, 1.0, -1.0)
        record = AugmentRecord(6, 8, CropWindow(2, 1, 4, 4, 9, 12), scale_x=1.5, scale_y=1.5)
        label = transform_flow_label(flow, record)
        assert label.shape == (4, 4)
        np.testing.assert_allclose(label.flow[..., 0], 1.5)
        np.testing.assert_allclose(label.flow[..., 1], -1.5)
        assert label.metadata["augment"]["scale_x"] == 1.5

    def test_crop_selects_window(self):
        """The label is the record's crop of the transformed flow."""
        flow = np.zeros((6, 6, 2))
        flow[..., 0] = np.arange(6.0)
        label = transform_flow_label(flow, AugmentRecord(6, 6, CropWindow(2, 0, 6, 3, 6, 6)))
        np.testing.assert_allclose(label.flow[0, :, 0], [2.0, 3.0, 4.0])

    def test_validity_follows_geometry(self):
        """A validity mask is flipped along with the flow."""
        valid = np.ones((4, 4))
        valid[:, 0] = 0.0
        label = transform_flow_label(np.zeros((4, 4, 2)), AugmentRecord(4, 4, CropWindow.full(4, 4), flip_lr=True), valid)
        np.testing.assert_allclose(label.valid[:, -1], 0.0)
        np.testing.assert_allclose(label.valid[:, 0], 1.0)

    def test_double_flip_is_identity(self, texture):
        """Flipping twice returns the original image."""
        image = texture(6, 7)
        record = AugmentRecord(6, 7, CropWindow.full(6, 7), flip_lr=True)
        (once,) = geometric_augment([image], record)
        (twice,) = geometric_augment([once], record)
        np.testing.assert_array_equal(twice, image)

    def test_scale_two_doubles_dimensions(self, texture):
        """Scale 2 on H x W gives 2H x 2W."""
        record = AugmentRecord(5, 6, CropWindow.full(10, 12), scale_x=2.0, scale_y=2.0)
        assert geometric_augment([texture(5, 6)], record)[0].shape == (10, 12, 3)

    def test_geometric_frame_has_scaled_shape(self, texture):
        """geometric_frame scales and flips without cropping."""
        record = AugmentRecord(6, 8, CropWindow(0, 0, 4, 4, 9, 12), flip_lr=True, scale_x=1.5, scale_y=1.5)
        assert geometric_frame(texture(6, 8), record).shape == (9, 12, 3)

    def test_wrong_source_shape(self):
        """Arrays must match the record's source frame."""
        with pytest.raises(RejectedInputError):
            transform_flow_label(np.zeros((5, 6, 2)), AugmentRecord.identity(6, 6))


# ============================================================
# INVERSION MODEL
# ============================================================

class TestInversionModel:
    """Tests for the tiny backward-to-forward CNN."""

    def test_coordinate_channels(self):
        """Coordinates span [-1, 1] along each axis."""
        coords = coordinate_channels(3, 5)
        assert coords.shape == (3, 5, 2)
        np.testing.assert_allclose(coords[0, :, 0], [-1.0, -0.5, 0.0, 0.5, 1.0])
        np.testing.assert_allclose(coords[:, 0, 1], [-1.0, 0.0, 1.0])

    def test_fresh_model_predicts_zero(self, rng):
        """A freshly initialised model outputs zero flow whatever the input."""
        prediction = TinyInversionModel.initialize(seed=0).predict(rng.normal(0.0, 3.0, (6, 6, 2)))
        np.testing.assert_array_equal(prediction, 0.0)

    def test_initialization_depends_on_seed_only(self):
        """Hidden weights come from the seed; the output layer starts at zero."""
        a, b, c = (TinyInversionModel.initialize(seed=s) for s in (4, 4, 5))
        for pa, pb in zip(a.parameters, b.parameters):
            np.testing.assert_array_equal(pa, pb)
        assert not np.array_equal(a.kernels[0], c.kernels[0])
        np.testing.assert_array_equal(a.kernels[2], 0.0)
        np.testing.assert_array_equal(a.biases[2], 0.0)

    def test_training_starts_from_fresh_model(self):
        """The first training loss is the fresh model's loss, far from the target."""
        triplet = constant_velocity_triplet(16, 16, (3.0, 1.0), seed=3)
        config = InversionTrainingConfig(steps=1, seed=6)
        _, losses = fit_inversion_model(triplet.backward, triplet.forward, triplet.visible, config)
        fresh, _ = inversion_loss(
            TinyInversionModel.initialize(6), triplet.backward, triplet.forward, triplet.visible
        )
        assert losses[0] == pytest.approx(fresh)
        assert losses[0] > 1.0

    def test_zero_model_predicts_zero(self, rng):
        """An all-zero model outputs zero flow."""
        prediction = TinyInversionModel.zeros().predict(rng.normal(size=(5, 5, 2)))
        np.testing.assert_array_equal(prediction, 0.0)

    def test_occluded_pixels_do_not_count(self, rng):
        """Changing the target where the weight is zero leaves the loss unchanged."""
        model = TinyInversionModel.initialize(seed=2)
        backward = rng.normal(size=(6, 6, 2))
        forward = rng.normal(size=(6, 6, 2))
        weight = np.ones((6, 6))
        weight[:2] = 0.0
        perturbed = forward.copy()
        perturbed[:2] += 50.0
        assert inversion_loss(model, backward, forward, weight)[0] == inversion_loss(
            model, backward, perturbed, weight
        )[0]

    def test_parameter_count(self):
        """[16, 16, 2] channels with 3x3 kernels over 4 inputs."""
        expected = 9 * 4 * 16 + 16 + 9 * 16 * 16 + 16 + 9 * 16 * 2 + 2
        assert TinyInversionModel.zeros().to_dict()["parameters"] == expected

    @pytest.mark.parametrize("index", [1, 2, 5])
    def test_parameter_gradients(self, rng, index):
        """Backpropagated parameter gradients pass the finite-difference check."""
        base = TinyInversionModel.initialize(seed=1)
        params = base.parameters
        params[2] = rng.normal(0.0, 0.3, params[2].shape)
        backward = rng.normal(size=(5, 5, 2))
        forward = rng.normal(0.0, 3.0, size=(5, 5, 2))
        weight = rng.uniform(0.2, 1.0, (5, 5))

        def loss(value):
            trial = list(params)
            trial[index] = value
            model = TinyInversionModel.from_parameters(trial)
            total, grads = inversion_loss(model, backward, forward, weight)
            return total, grads[index]

        report = finite_difference_check(loss, params[index], probes=30, seed=index)
        assert report.passed, report.to_dict()

    def test_training_reduces_loss(self, rng):
        """Training on a non-constant target lowers the loss."""
        backward = rng.normal(size=(8, 8, 2))
        forward = -backward
        model, losses = fit_inversion_model(
            backward, forward, np.ones((8, 8)), InversionTrainingConfig(steps=30, learning_rate=0.01)
        )
        assert len(losses) == 30
        assert losses[-1] < losses[0]

    def test_no_visible_pixels(self):
        """Training needs at least one visible pixel."""
        with pytest.raises(RejectedInputError):
            fit_inversion_model(np.zeros((4, 4, 2)), np.zeros((4, 4, 2)), np.zeros((4, 4)))

    def test_inpaint_keeps_visible_flow(self, rng):
        """Visible pixels keep the forward flow; occluded ones take the prediction."""
        forward = rng.normal(size=(4, 4, 2))
        visible = np.ones((4, 4))
        visible[0, 0] = 0.0
        params = TinyInversionModel.zeros().parameters
        params[5] = np.array([7.0, 7.0])
        model = TinyInversionModel.from_parameters(params)
        label = inpaint_occluded_flow(forward, model, np.zeros((4, 4, 2)), visible)
        assert label.provenance == "multi_frame"
        np.testing.assert_allclose(label.flow[1:], forward[1:])
        np.testing.assert_allclose(label.flow[0, 0], [7.0, 7.0])
        assert label.metadata["inpainted_fraction"] == pytest.approx(1 / 16)

    def test_training_fits_constant_velocity(self):
        """Training, not initialisation, brings the visible error under 0.05 px."""
        result = check_inversion_training(seed=0)
        assert result.details["initial_epe"] == pytest.approx(3.0)
        assert result.value < 0.05
        assert result.passed, result.to_dict()


# ============================================================
# LABEL GENERATION
# ============================================================

class TestLabels:
    """Tests for two-frame, multi-frame and mixed labels."""

    def test_two_frame_label_follows_record(self, texture):
        """The teacher flow is carried into the student geometry."""
        record = AugmentRecord(8, 8, CropWindow(0, 0, 6, 6, 8, 8), flip_lr=True, seed=4)
        label = generate_selfsup_label(
            texture(8, 8), texture(8, 8, seed=1), lambda a, b: _constant_flow(8, 8, 1.0, 0.5), record
        )
        assert label.provenance == "two_frame"
        assert label.shape == (6, 6)
        np.testing.assert_allclose(label.flow[..., 0], -1.0)
        assert label.metadata["seed"] == 4

    def test_estimator_may_return_sequence(self, texture):
        """A FlowSequence result uses its final iterate."""
        sequence = FlowSequence((np.zeros((8, 8, 2)), _constant_flow(8, 8, 2.0, 0.0)))
        label = generate_selfsup_label(
            texture(8, 8), texture(8, 8), lambda a, b: sequence, AugmentRecord.identity(8, 8)
        )
        np.testing.assert_allclose(label.flow[..., 0], 2.0)

    def test_student_teacher_round(self, shifted_pair):
        """One round yields a label and a student solve on the crop."""
        record = AugmentRecord.sample((24, 24), crop_size=(16, 16), seed=2)
        result = run_student_teacher(
            shifted_pair.image1,
            shifted_pair.image2,
            TINY,
            record=record,
            teacher=lambda a, b: _constant_flow(24, 24, 1.5, -1.0),
        )
        assert result.label.shape == (16, 16)
        assert result.student.flow.shape == (16, 16, 2)
        assert np.isfinite(result.sequence_loss)
        assert result.sequence_loss > 0.0
        assert result.to_dict()["label"]["provenance"] == "two_frame"

    def test_student_teacher_augmented_data_term(self, shifted_pair):
        """The augmented data term path runs end to end."""
        result = run_student_teacher(
            shifted_pair.image1,
            shifted_pair.image2,
            TINY,
            augment=AugmentConfig(augment_data_term=True, eraser_prob=1.0),
            crop_size=(16, 16),
            teacher=lambda a, b: _constant_flow(24, 24, 1.5, -1.0),
        )
        assert result.student.flow.shape == (16, 16, 2)

    def test_multiframe_label(self):
        """A triplet yields a multi-frame label on the middle frame."""
        triplet = constant_velocity_triplet(16, 16, (2.0, 1.0), seed=1)
        result = generate_multiframe_label(
            triplet.frame_prev, triplet.frame_t, triplet.frame_next, TINY, InversionTrainingConfig(steps=5)
        )
        assert result.label.provenance == "multi_frame"
        assert result.label.shape == (16, 16)
        assert result.occlusion.shape == (16, 16)
        assert result.to_dict()["model"]["channels"] == [16, 16, 2]

    def test_multiframe_label_blends_solver_flows(self):
        """The label mixes the solved forward flow and the trained model's inversion by visibility."""
        triplet = exiting_strip_triplet(seed=2)
        result = generate_multiframe_label(
            triplet.frame_prev, triplet.frame_t, triplet.frame_next, TINY, InversionTrainingConfig(steps=20)
        )
        visible = result.occlusion[..., None]
        expected = visible * result.forward + (1.0 - visible) * result.model.predict(result.backward)
        np.testing.assert_allclose(result.label.flow, expected, atol=1e-12)
        assert result.label.metadata["inpainted_fraction"] == pytest.approx(1.0 - result.occlusion.mean())
        assert not np.array_equal(result.model.kernels[2], 0.0)


class TestMixing:
    """Tests for weighted label mixing."""

    SOURCES = {"two": ["a", "b", "c"], "multi": ["x", "y"]}

    def test_deterministic(self):
        """The same seed gives the same draws."""
        assert mix_label_keys(self.SOURCES, seed=5) == mix_label_keys(self.SOURCES, seed=5)

    def test_default_count(self):
        """Without a count every key's worth of draws is made."""
        assert len(mix_label_keys(self.SOURCES)) == 5

    def test_zero_weight_excludes_source(self):
        """A zero weight never picks that source."""
        picks = mix_label_keys(self.SOURCES, {"two": 0.0, "multi": 1.0}, count=50)
        assert {name for name, _ in picks} == {"multi"}
        assert {key for _, key in picks} <= {"x", "y"}

    def test_equal_weights_mix_evenly(self):
        """Equal weights draw each source about half the time."""
        picks = mix_label_keys(self.SOURCES, count=2000, seed=1)
        share = sum(name == "two" for name, _ in picks) / 2000
        assert 0.45 < share < 0.55

    def test_no_keys(self):
        """Empty sources raise."""
        with pytest.raises(RejectedInputError):
            mix_label_keys({"two": []})

    def test_negative_weight(self):
        """Weights must be non-negative."""
        with pytest.raises(RejectedInputError):
            mix_label_keys(self.SOURCES, {"two": -1.0})
