import numpy as np
import pytest

from evkit.dataset import (
    MOTION_CLASSES,
    SyntheticSpec,
    downsample_area,
    generate_synthetic,
    load_dataset,
    load_manifest,
    load_reconstruction_pairs,
    render_sample_frames,
)
from evkit.emulator import EmulatorConfig, emulate_sequence
from evkit.events import SensorGeometry
from evkit.formats import write_events
from evkit.events import EventStream

SMALL_SPEC = SyntheticSpec(
    classes=("expand", "contract"),
    samples_per_class=3,
    geometry=SensorGeometry(32, 32),
    frames_per_sample=5,
    seed=7,
)


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    manifest = generate_synthetic(SMALL_SPEC, root)
    return root, manifest


class TestSpecValidation:
    def test_class_registry(self):
        assert len(MOTION_CLASSES) == 7

    def test_unknown_class_rejected(self):
        with pytest.raises(ValueError, match="unknown motion"):
            SyntheticSpec(classes=("expand", "wobble"))

    def test_too_few_frames_rejected(self):
        with pytest.raises(ValueError):
            SyntheticSpec(frames_per_sample=1)


class TestGeneration:
    def test_sample_count_and_split(self, small_dataset):
        _, manifest = small_dataset
        assert len(manifest.samples) == 6
        # round(3 * 0.8) = 2 train per class
        assert len(manifest.split("train")) == 4
        assert len(manifest.split("val")) == 2

    def test_files_exist(self, small_dataset):
        root, manifest = small_dataset
        for s in manifest.samples:
            assert (root / s.events_path).exists()
            assert len(s.frame_paths) == 5
            for rel in s.frame_paths:
                assert (root / rel).exists()

    def test_deterministic_bytes(self, tmp_path):
        m1 = generate_synthetic(SMALL_SPEC, tmp_path / "a")
        m2 = generate_synthetic(SMALL_SPEC, tmp_path / "b")
        for s1, s2 in zip(m1.samples, m2.samples):
            assert s1.sample_id == s2.sample_id
            a = (tmp_path / "a" / s1.events_path).read_bytes()
            b = (tmp_path / "b" / s2.events_path).read_bytes()
            assert a == b
            for r1, r2 in zip(s1.frame_paths, s2.frame_paths):
                assert (tmp_path / "a" / r1).read_bytes() == (tmp_path / "b" / r2).read_bytes()
        assert (tmp_path / "a" / "manifest.json").read_bytes() == (
            tmp_path / "b" / "manifest.json"
        ).read_bytes()

    def test_expand_contract_polarity_bias(self):
        spec = SMALL_SPEC
        rng_e = np.random.Generator(np.random.PCG64(0))
        rng_c = np.random.Generator(np.random.PCG64(0))
        cfg = EmulatorConfig(sigma_threshold=0.0, cutoff_hz=0.0)
        grow = emulate_sequence(render_sample_frames("expand", spec, rng_e), cfg)
        shrink = emulate_sequence(render_sample_frames("contract", spec, rng_c), cfg)
        # a growing bright blob brightens pixels, a shrinking one darkens them
        assert np.sum(grow.p == 1) > np.sum(grow.p == -1)
        assert np.sum(shrink.p == -1) > np.sum(shrink.p == 1)


class TestManifestIo:
    def test_round_trip(self, small_dataset):
        root, manifest = small_dataset
        loaded = load_manifest(root / "manifest.json")
        assert loaded.geometry == manifest.geometry
        assert loaded.classes == manifest.classes
        assert loaded.samples == manifest.samples

    def test_missing_file_detected(self, tmp_path):
        manifest = generate_synthetic(SMALL_SPEC, tmp_path)
        (tmp_path / manifest.samples[0].frame_paths[2]).unlink()
        with pytest.raises(FileNotFoundError, match="missing file"):
            load_manifest(tmp_path / "manifest.json")
        # check can be disabled
        load_manifest(tmp_path / "manifest.json", check_files=False)


class TestDownsample:
    def test_block_mean_oracle(self):
        img = np.arange(16.0).reshape(4, 4)
        out = downsample_area(img, 2)
        assert np.array_equal(out, [[2.5, 4.5], [10.5, 12.5]])

    def test_channel_axis_preserved(self):
        img = np.ones((3, 8, 8))
        assert downsample_area(img, 4).shape == (3, 4, 4)

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError, match="area-average"):
            downsample_area(np.ones((10, 10)), 3)


class TestLoaders:
    def test_classification_shapes(self, small_dataset):
        _, manifest = small_dataset
        ds = load_dataset(manifest, input_hw=16)
        # events span 4 inter-frame gaps -> 4 windows -> 2 triplets each
        assert ds.sequences.shape == (12, 3, 3 * 16 * 16)
        assert ds.labels.shape == (12,)
        assert set(ds.labels.tolist()) == {0, 1}
        assert ds.sequences.min() >= 0.0 and ds.sequences.max() <= 1.0

    def test_split_filter(self, small_dataset):
        _, manifest = small_dataset
        train = load_dataset(manifest, input_hw=16, split="train")
        val = load_dataset(manifest, input_hw=16, split="val")
        assert train.sequences.shape[0] == 8
        assert val.sequences.shape[0] == 4

    def test_short_samples_zero_padded_and_flagged(self, small_dataset):
        _, manifest = small_dataset
        # one giant window per sample -> fewer than 3 windows -> padding
        ds = load_dataset(manifest, delta_t=10_000_000, input_hw=16)
        assert ds.sequences.shape[0] == 6
        assert ds.degenerate_flags.all()
        assert np.all(ds.sequences[:, 1:] == 0)

    def test_empty_events_sample_flagged(self, tmp_path, small_dataset):
        root, _ = small_dataset
        manifest = load_manifest(root / "manifest.json")
        write_events(root / manifest.samples[0].events_path, EventStream(SMALL_SPEC.geometry))
        try:
            ds = load_dataset(manifest, input_hw=16)
            assert ds.degenerate_flags[ds.sample_ids.index(manifest.samples[0].sample_id)]
        finally:
            generate_synthetic(SMALL_SPEC, root)  # restore for other tests

    def test_reconstruction_pairs(self, small_dataset):
        _, manifest = small_dataset
        x, y = load_reconstruction_pairs(manifest, input_hw=16)
        assert x.shape == (16, 3 * 16 * 16)  # 4 train samples x 4 windows
        assert y.shape == (16, 16 * 16)
        assert x.min() >= 0.0 and x.max() <= 1.0
        assert y.min() >= -1.0 and y.max() <= 1.0
