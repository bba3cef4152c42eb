"""
Tests for flow file formats, metrics, colour coding and dataset ingestion.
"""

import csv
import struct

import numpy as np
import pytest

from pysmurf.errors import DatasetError, FlowFormatError, RejectedInputError
from pysmurf.flowkit import (
    FLO_MAGIC,
    EvalStats,
    FlowFileRecord,
    colorize_flow,
    epe,
    error_rate,
    evaluate_pair,
    format_stats_table,
    ingest_dataset,
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
    write_stats_csv,
)


def _uniform(height, width, u, v):
    return np.broadcast_to(np.array([u, v], dtype=np.float64), (height, width, 2)).copy()


# ============================================================
# FILE FORMATS
# ============================================================

class TestFlo:
    """Tests for the Middlebury .flo codec."""

    def test_bit_exact(self, rng):
        """float32 values survive a write and read unchanged."""
        flow = rng.normal(0.0, 10.0, (5, 7, 2)).astype(np.float32).astype(np.float64)
        data = write_flo(flow)
        record = read_flo(data)
        np.testing.assert_array_equal(record.flow, flow)
        assert record.format == "flo"
        assert write_flo(record) == data

    def test_header_layout(self):
        """Magic, then width, then height, little-endian."""
        data = write_flo(np.zeros((3, 4, 2)))
        magic, width, height = struct.unpack("<fii", data[:12])
        assert magic == np.float32(FLO_MAGIC)
        assert (width, height) == (4, 3)
        assert len(data) == 12 + 8 * 12

    def test_bad_magic(self):
        """A wrong magic number is rejected at offset 0."""
        data = bytearray(write_flo(np.zeros((2, 2, 2))))
        data[:4] = struct.pack("<f", 1.0)
        with pytest.raises(FlowFormatError) as info:
            read_flo(bytes(data))
        assert info.value.offset == 0

    def test_truncated(self):
        """Short headers and payloads are rejected."""
        data = write_flo(np.zeros((2, 2, 2)))
        with pytest.raises(FlowFormatError):
            read_flo(data[:8])
        with pytest.raises(FlowFormatError, match="truncated payload"):
            read_flo(data[:-4])

    def test_bad_dimensions(self):
        """Non-positive dimensions are rejected."""
        with pytest.raises(FlowFormatError, match="invalid dimensions"):
            read_flo(struct.pack("<fii", FLO_MAGIC, 0, 3))


class TestKittiPng:
    """Tests for the KITTI 16-bit PNG codec."""

    def test_within_quantization(self, rng):
        """Round trips are within 1/64 px."""
        flow = rng.uniform(-100.0, 100.0, (6, 9, 2))
        record = read_kitti_png(write_kitti_png(flow))
        assert np.abs(record.flow - flow).max() <= 1.0 / 64.0
        np.testing.assert_array_equal(record.valid, 1.0)
        assert record.format == "kitti_png"

    def test_invalid_pixels_read_zero(self):
        """Invalid pixels keep validity 0 and zero flow."""
        valid = np.ones((3, 3))
        valid[1, 1] = 0.0
        data = write_kitti_png(FlowFileRecord(_uniform(3, 3, 2.0, -1.0), valid))
        record = read_kitti_png(data)
        assert record.valid[1, 1] == 0.0
        np.testing.assert_array_equal(record.flow[1, 1], [0.0, 0.0])
        np.testing.assert_array_equal(record.flow[0, 0], [2.0, -1.0])

    def test_quantize_offset(self):
        """Zero flow stores 2^15; one pixel adds 64."""
        np.testing.assert_array_equal(kitti_quantize(np.array([0.0, 1.0, -1.0])), [32768, 32832, 32704])

    def test_undecodable(self):
        """Random bytes are not a PNG."""
        with pytest.raises(FlowFormatError):
            read_kitti_png(b"not a png at all")


class TestFlowFiles:
    """Tests for path-based reading and writing."""

    @pytest.mark.parametrize("suffix", [".flo", ".png"])
    def test_write_read(self, tmp_path, suffix):
        """The extension picks the codec."""
        flow = _uniform(4, 5, 1.5, -0.25)
        path = tmp_path / f"flow{suffix}"
        write_flow_file(path, flow)
        np.testing.assert_allclose(read_flow_file(path).flow, flow)

    def test_unknown_extension(self, tmp_path):
        """Other extensions are refused on both sides."""
        path = tmp_path / "flow.bin"
        with pytest.raises(RejectedInputError):
            write_flow_file(path, np.zeros((2, 2, 2)))
        path.write_bytes(b"\x00")
        with pytest.raises(FlowFormatError):
            read_flow_file(path)

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        """Only the target file remains after a write."""
        write_flow_file(tmp_path / "a.flo", np.zeros((2, 2, 2)))
        assert [p.name for p in tmp_path.iterdir()] == ["a.flo"]

    def test_record_validates_mask(self):
        """Validity must match the flow grid."""
        with pytest.raises(RejectedInputError):
            FlowFileRecord(np.zeros((3, 3, 2)), np.ones((2, 3)))


class TestImages:
    """Tests for PNG and PPM images."""

    @pytest.mark.parametrize("suffix, depth", [(".png", 8), (".png", 16), (".ppm", 8)])
    def test_rgb_round_trip(self, tmp_path, texture, suffix, depth):
        """Images come back as RGB within one quantization step."""
        image = texture(6, 5)
        path = tmp_path / f"frame{suffix}"
        write_image(path, image, bit_depth=depth)
        back = read_image(path)
        assert back.shape == (6, 5, 3)
        step = 1.0 / (255.0 if depth == 8 else 65535.0)
        assert np.abs(back - image).max() <= step

    def test_channel_order(self, tmp_path):
        """A red image reads back red."""
        red = np.zeros((2, 2, 3))
        red[..., 0] = 1.0
        write_image(tmp_path / "red.png", red)
        np.testing.assert_array_equal(read_image(tmp_path / "red.png")[0, 0], [1.0, 0.0, 0.0])

    def test_mask_png(self, tmp_path):
        """Masks are written as grayscale."""
        mask = np.array([[0.0, 1.0], [1.0, 0.0]])
        write_mask_png(tmp_path / "mask.png", mask)
        np.testing.assert_array_equal(read_image(tmp_path / "mask.png")[..., 0], mask)

    def test_bad_depth(self, tmp_path):
        """Only 8 and 16 bits are supported."""
        with pytest.raises(RejectedInputError):
            write_image(tmp_path / "x.png", np.zeros((2, 2, 3)), bit_depth=12)


# ============================================================
# METRICS
# ============================================================

class TestMetrics:
    """Tests for endpoint error and error rate."""

    def test_three_four_five(self):
        """A uniform (3, 4) error has EPE exactly 5."""
        stats = epe(_uniform(4, 4, 3.0, 4.0), np.zeros((4, 4, 2)))
        assert stats.epe == 5.0
        assert stats.count_valid == 16

    def test_conjunction_and_disjunction(self):
        """EPE 5 on a length-100 vector is an outlier only under disjunction."""
        gt = _uniform(2, 2, 100.0, 0.0)
        pred = _uniform(2, 2, 105.0, 0.0)
        assert error_rate(pred, gt, "conjunction") == 0.0
        assert error_rate(pred, gt, "disjunction") == 100.0

    def test_both_thresholds_exceeded(self):
        """EPE 10 on a length-10 vector is an outlier in both modes."""
        gt = _uniform(2, 2, 10.0, 0.0)
        pred = _uniform(2, 2, 0.0, 0.0)
        assert error_rate(pred, gt, "conjunction") == 100.0
        assert error_rate(pred, gt, "disjunction") == 100.0

    def test_matches_loop(self, rng):
        """EPE and ER agree with a per-pixel loop."""
        gt = rng.normal(0.0, 20.0, (7, 6, 2))
        pred = gt + rng.normal(0.0, 3.0, (7, 6, 2))
        valid = (rng.random((7, 6)) > 0.2).astype(np.float64)
        errors, outliers = [], []
        for y in range(7):
            for x in range(6):
                if valid[y, x] < 0.5:
                    continue
                e = float(np.hypot(*(pred[y, x] - gt[y, x])))
                errors.append(e)
                outliers.append(e > 3.0 and e > 0.05 * float(np.hypot(*gt[y, x])))
        stats = epe(pred, FlowFileRecord(gt, valid))
        assert stats.epe == pytest.approx(np.mean(errors), abs=1e-10)
        assert stats.error_rate == pytest.approx(100.0 * np.mean(outliers), abs=1e-10)

    def test_noc_mask(self):
        """EPE-noc only counts non-occluded valid pixels."""
        pred = np.zeros((2, 2, 2))
        gt = np.zeros((2, 2, 2))
        gt[0, 0] = (6.0, 8.0)
        noc = np.array([[1.0, 1.0], [0.0, 0.0]])
        stats = epe(pred, gt, noc=noc)
        assert stats.count_noc == 2
        assert stats.epe_noc == pytest.approx(5.0)
        assert stats.epe == pytest.approx(2.5)

    def test_invalid_everywhere(self):
        """Ground truth without valid pixels is rejected."""
        with pytest.raises(RejectedInputError):
            epe(np.zeros((2, 2, 2)), FlowFileRecord(np.zeros((2, 2, 2)), np.zeros((2, 2))))

    def test_shape_mismatch(self):
        """Prediction and ground truth must agree."""
        with pytest.raises(RejectedInputError):
            epe(np.zeros((2, 2, 2)), np.zeros((3, 2, 2)))

    def test_unknown_mode(self):
        """Only conjunction and disjunction exist."""
        with pytest.raises(RejectedInputError):
            error_rate(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), "either")

    def test_mean_is_pixel_weighted(self):
        """Averages weight items by valid pixels."""
        a = EvalStats(1.0, 1.0, 0.0, 10, 10, 10)
        b = EvalStats(4.0, 4.0, 50.0, 30, 30, 30)
        mean = EvalStats.mean([a, b])
        assert mean.epe == pytest.approx(3.25)
        assert mean.error_rate == pytest.approx(37.5)
        assert mean.count_valid == 40

    def test_evaluate_pair_working_size(self, texture):
        """Flow estimated at a working size is rescaled to the input size."""
        calls = []

        def estimator(image1, image2):
            calls.append(image1.shape[:2])
            return _uniform(*image1.shape[:2], 1.0, 0.0)

        flow, stats = evaluate_pair(texture(16, 16), texture(16, 16), np.zeros((16, 16, 2)), estimator, (8, 8))
        assert calls == [(8, 8)]
        assert flow.shape == (16, 16, 2)
        assert stats.epe == pytest.approx(2.0)

    def test_reports(self, tmp_path):
        """CSV rows and the text table carry every item."""
        rows = [("alley_1/000001", EvalStats(1.5, 1.0, 2.0, 4, 4, 3))]
        path = tmp_path / "out" / "metrics.csv"
        write_stats_csv(path, rows)
        with path.open() as handle:
            read = list(csv.DictReader(handle))
        assert read[0]["name"] == "alley_1/000001"
        assert float(read[0]["epe"]) == 1.5
        table = format_stats_table(rows)
        assert "alley_1/000001" in table
        assert "1.5000" in table


class TestColorize:
    """Tests for flow colour coding."""

    def test_zero_flow_is_white(self):
        """Zero flow renders as the wheel's center."""
        np.testing.assert_allclose(colorize_flow(np.zeros((3, 3, 2))), 1.0, atol=1e-6)

    def test_direction_sets_hue(self):
        """Rightward motion at full magnitude is red."""
        np.testing.assert_allclose(colorize_flow(_uniform(2, 2, 1.0, 0.0))[0, 0], [1.0, 0.0, 0.0], atol=1e-5)

    def test_saturation_scales_with_magnitude(self):
        """Half the max norm is half saturated."""
        flow = np.zeros((1, 2, 2))
        flow[0, 0] = (2.0, 0.0)
        flow[0, 1] = (1.0, 0.0)
        image = colorize_flow(flow)
        assert image[0, 1, 1] == pytest.approx(0.5, abs=1e-5)
        assert colorize_flow(flow, max_norm=4.0)[0, 0, 1] == pytest.approx(0.5, abs=1e-5)


# ============================================================
# DATASETS
# ============================================================

class TestDatasets:
    """Tests for dataset layouts."""

    def _frames(self, directory, names, texture):
        directory.mkdir(parents=True, exist_ok=True)
        for seed, name in enumerate(names):
            write_image(directory / name, texture(8, 8, seed=seed))

    def test_flat_pairs(self, tmp_path, texture):
        """Consecutive frames pair up with optional ground truth."""
        self._frames(tmp_path, ["frame_0001.png", "frame_0002.png", "frame_0003.png"], texture)
        write_flow_file(tmp_path / "flow" / "frame_0001.flo", _uniform(8, 8, 1.0, 0.0))
        items = list(ingest_dataset(tmp_path, "flat-pairs"))
        assert [item.key for item in items] == ["frame/000001", "frame/000002"]
        assert items[0].gt_path is not None
        assert items[1].gt_path is None
        assert len(items[0].images()) == 2
        np.testing.assert_allclose(items[0].ground_truth().flow[..., 0], 1.0)

    def test_triplets_reference_middle_frame(self, tmp_path, texture):
        """A triplet is keyed by its middle frame."""
        self._frames(tmp_path, ["f1.png", "f2.png", "f3.png"], texture)
        items = list(ingest_dataset(tmp_path, "flat-pairs", kind="triplets"))
        assert len(items) == 1
        assert items[0].frame == 2
        assert len(items[0].paths) == 3

    def test_gap_skips_window(self, tmp_path, texture):
        """Windows with a missing frame are skipped."""
        self._frames(tmp_path, ["f1.png", "f2.png", "f4.png"], texture)
        assert [item.frame for item in ingest_dataset(tmp_path, "flat-pairs")] == [1]

    def test_sintel(self, tmp_path, texture):
        """Sintel items are grouped per sequence directory."""
        self._frames(tmp_path / "clean" / "alley_1", ["frame_0001.png", "frame_0002.png"], texture)
        self._frames(tmp_path / "clean" / "bamboo_1", ["frame_0001.png", "frame_0002.png"], texture)
        write_flow_file(tmp_path / "flow" / "alley_1" / "frame_0001.flo", np.zeros((8, 8, 2)))
        items = list(ingest_dataset(tmp_path, "sintel"))
        assert [item.key for item in items] == ["alley_1/000001", "bamboo_1/000001"]
        assert items[0].gt_path is not None

    def test_sintel_missing_pass(self, tmp_path):
        """A missing pass directory is a dataset error."""
        with pytest.raises(DatasetError):
            list(ingest_dataset(tmp_path, "sintel", pass_name="final"))

    def test_kitti(self, tmp_path, texture):
        """KITTI pairs find their occ and noc ground truth."""
        self._frames(tmp_path / "image_2", ["000000_10.png", "000000_11.png"], texture)
        write_flow_file(tmp_path / "flow_occ" / "000000_10.png", np.zeros((8, 8, 2)))
        write_flow_file(tmp_path / "flow_noc" / "000000_10.png", np.zeros((8, 8, 2)))
        (item,) = list(ingest_dataset(tmp_path, "kitti15"))
        assert item.key == "000000/000010"
        np.testing.assert_array_equal(item.noc_mask(), 1.0)

    def test_empty_directory(self, tmp_path):
        """No usable items is a dataset error."""
        with pytest.raises(DatasetError):
            list(ingest_dataset(tmp_path, "flat-pairs"))

    def test_missing_root(self, tmp_path):
        """A missing root is a dataset error."""
        with pytest.raises(DatasetError):
            list(ingest_dataset(tmp_path / "absent", "flat-pairs"))

    def test_unknown_layout(self, tmp_path):
        """Unknown layouts are rejected."""
        with pytest.raises(RejectedInputError):
            list(ingest_dataset(tmp_path, "middlebury"))
