import math

import numpy as np
import pytest

from evkit.emulator import (
    EmulatorConfig,
    FrameSequence,
    PixelState,
    draw_thresholds,
    emulate_pixel,
    emulate_sequence,
    log_luma,
    lowpass_alpha,
    lowpass_step,
    paired_samples,
)
from evkit.events import SensorGeometry

IDEAL = EmulatorConfig(sigma_threshold=0.0, cutoff_hz=0.0)


def crossing_count_oracle(l_ref, l_cur, c):
    """Independent scalar oracle: events per polarity between two levels."""
    d = l_cur - l_ref
    if d > 0:
        return math.floor(d / c), 0
    return 0, math.floor(-d / c)


def frame_pair_sequence(f0, f1, dt=33_333):
    f0 = np.asarray(f0, dtype=np.uint8)
    g = SensorGeometry(f0.shape[1], f0.shape[0])
    return FrameSequence(np.stack([f0, f1]), np.array([0, dt]), g)


class TestLogLuma:
    def test_zero_intensity(self):
        assert log_luma(np.array([[0]]))[0, 0] == pytest.approx(math.log(1e-3))

    def test_full_intensity(self):
        assert log_luma(np.array([[255]]))[0, 0] == pytest.approx(math.log(1.001))

    def test_monotone(self):
        assert log_luma(np.array([[100]]))[0, 0] < log_luma(np.array([[200]]))[0, 0]


class TestLowpass:
    def test_cutoff_zero_is_passthrough(self):
        state = PixelState(l_ref=0.0, l_lp=0.3, c_pos=0.15, c_neg=0.15)
        out = lowpass_step(state, 1.25, 1000, 0.0)
        assert out.l_lp == 1.25

    def test_monotone_convergence(self):
        state = PixelState(l_ref=0.0, l_lp=0.0, c_pos=0.15, c_neg=0.15)
        prev_gap = 1.0
        for _ in range(50):
            state = lowpass_step(state, 1.0, 5000, 30.0)
            gap = 1.0 - state.l_lp
            assert 0 <= gap <= prev_gap
            prev_gap = gap
        assert state.l_lp == pytest.approx(1.0, abs=1e-6)

    def test_alpha_30hz_33ms(self):
        # scalar evaluation: 1 - exp(-2*pi*30*0.033333)
        assert lowpass_alpha(30.0, 33_333) == pytest.approx(1.0 - math.exp(-2 * math.pi * 30 * 0.033333), abs=1e-6)
        assert lowpass_alpha(30.0, 33_333) == pytest.approx(0.99813, abs=5e-4)


class TestEmulatePixel:
    def test_doubling_gives_four_positive_events(self):
        l0 = log_luma(np.array([[100.0]]))[0, 0]
        l1 = log_luma(np.array([[200.0]]))[0, 0]
        state = PixelState(l_ref=l0, l_lp=l0, c_pos=0.15, c_neg=0.15)
        events, _ = emulate_pixel(state, l0, l1, 0, 33_333, IDEAL)
        # delta L is ~ln 2 = 0.6931, so exactly floor(0.6931/0.15) = 4 events
        assert crossing_count_oracle(l0, l1, 0.15) == (4, 0)
        assert len(events) == 4
        assert all(p == 1 for _, p in events)
        assert events == sorted(events)

    def test_constant_intensity_no_events(self):
        state = PixelState(l_ref=0.5, l_lp=0.5, c_pos=0.15, c_neg=0.15)
        events, out = emulate_pixel(state, 0.5, 0.5, 0, 1000, IDEAL)
        assert events == []
        assert out.l_ref == 0.5

    def test_halving_mirrors_with_negative_events(self):
        l0 = log_luma(np.array([[200.0]]))[0, 0]
        l1 = log_luma(np.array([[100.0]]))[0, 0]
        state = PixelState(l_ref=l0, l_lp=l0, c_pos=0.15, c_neg=0.15)
        events, _ = emulate_pixel(state, l0, l1, 0, 33_333, IDEAL)
        assert crossing_count_oracle(l0, l1, 0.15) == (0, 4)
        assert len(events) == 4
        assert all(p == -1 for _, p in events)

    def test_timestamps_quantized(self):
        l0, l1 = 0.0, 1.0
        state = PixelState(l_ref=l0, l_lp=l0, c_pos=0.3, c_neg=0.3)
        events, _ = emulate_pixel(state, l0, l1, 0, 10_000, IDEAL)
        assert all(t % IDEAL.timestamp_resolution == 0 for t, _ in events)


class TestEmulateSequence:
    def test_identical_frames_empty(self):
        frame = np.full((8, 8), 128, dtype=np.uint8)
        stream = emulate_sequence(frame_pair_sequence(frame, frame), IDEAL)
        assert len(stream) == 0

    def test_insufficient_frames(self):
        g = SensorGeometry(4, 4)
        frames = FrameSequence(np.zeros((1, 4, 4), dtype=np.uint8), np.array([0]), g)
        with pytest.raises(ValueError, match="insufficient frames"):
            emulate_sequence(frames, IDEAL)

    def test_moving_dot_only_touched_pixels_fire(self):
        f0 = np.full((5, 5), 20, dtype=np.uint8)
        f1 = f0.copy()
        f0[2, 1] = 250
        f1[2, 2] = 250
        stream = emulate_sequence(frame_pair_sequence(f0, f1), IDEAL)
        touched = set(zip(stream.x.tolist(), stream.y.tolist()))
        assert touched == {(1, 2), (2, 2)}
        # leaving pixel fires negative, entering pixel positive
        assert set(stream.p[stream.x == 1].tolist()) == {-1}
        assert set(stream.p[stream.x == 2].tolist()) == {1}

    def test_total_positive_count_matches_brute_force(self):
        rng = np.random.default_rng(3)
        frames = rng.integers(0, 256, size=(4, 6, 6)).astype(np.uint8)
        seq = FrameSequence(frames, np.arange(4) * 33_333, SensorGeometry(6, 6))
        stream = emulate_sequence(seq, IDEAL)
        # brute-force per-pixel sum over frame pairs with reference tracking
        expected_pos = expected_neg = 0
        L = log_luma(frames[0])
        l_ref = L.copy()
        for i in range(1, 4):
            l_cur = log_luma(frames[i])
            for y in range(6):
                for x in range(6):
                    np_, nn = crossing_count_oracle(l_ref[y, x], l_cur[y, x], 0.15)
                    expected_pos += np_
                    expected_neg += nn
                    l_ref[y, x] += np_ * 0.15 - nn * 0.15
        assert int(np.sum(stream.p == 1)) == expected_pos
        assert int(np.sum(stream.p == -1)) == expected_neg

    def test_deterministic_with_sigma(self):
        rng = np.random.default_rng(5)
        frames = rng.integers(0, 256, size=(3, 8, 8)).astype(np.uint8)
        seq = FrameSequence(frames, np.arange(3) * 33_333, SensorGeometry(8, 8))
        cfg = EmulatorConfig(seed=99)
        s1 = emulate_sequence(seq, cfg)
        s2 = emulate_sequence(seq, cfg)
        assert s1 == s2

    def test_pair_reversal_swaps_polarities(self):
        rng = np.random.default_rng(8)
        f0 = rng.integers(0, 256, size=(8, 8)).astype(np.uint8)
        f1 = rng.integers(0, 256, size=(8, 8)).astype(np.uint8)
        fwd = emulate_sequence(frame_pair_sequence(f0, f1), IDEAL)
        rev = emulate_sequence(frame_pair_sequence(f1, f0), IDEAL)
        assert int(np.sum(fwd.p == 1)) == int(np.sum(rev.p == -1))
        assert int(np.sum(fwd.p == -1)) == int(np.sum(rev.p == 1))

    def test_sorted_canonical_order(self):
        rng = np.random.default_rng(2)
        frames = rng.integers(0, 256, size=(3, 10, 10)).astype(np.uint8)
        seq = FrameSequence(frames, np.arange(3) * 33_333, SensorGeometry(10, 10))
        stream = emulate_sequence(seq, IDEAL)
        keys = list(zip(stream.t.tolist(), stream.y.tolist(), stream.x.tolist(), stream.p.tolist()))
        assert keys == sorted(keys)


class TestThresholds:
    def test_clamped_and_reproducible(self):
        cfg = EmulatorConfig(sigma_threshold=0.2, seed=1)
        g = SensorGeometry(50, 40)
        cp1, cn1 = draw_thresholds(cfg, g)
        cp2, cn2 = draw_thresholds(cfg, g)
        assert np.array_equal(cp1, cp2) and np.array_equal(cn1, cn2)
        assert cp1.min() >= 0.01 and cn1.min() >= 0.01

    def test_sigma_statistics(self):
        cfg = EmulatorConfig(threshold_c=1.0, sigma_threshold=0.03, seed=2)
        cp, cn = draw_thresholds(cfg, SensorGeometry(300, 200))
        assert np.std(np.concatenate([cp.ravel(), cn.ravel()])) == pytest.approx(0.03, rel=0.05)


class TestPairedSamples:
    def test_two_frames_one_pair(self):
        f0 = np.full((6, 6), 50, dtype=np.uint8)
        f1 = np.full((6, 6), 200, dtype=np.uint8)
        pairs = paired_samples(frame_pair_sequence(f0, f1), IDEAL, 33_333, 1)
        assert len(pairs) == 1
        window, target = pairs[0]
        assert np.array_equal(target, f1)

    def test_one_window_per_frame_gap(self):
        rng = np.random.default_rng(4)
        frames = rng.integers(0, 256, size=(4, 8, 8)).astype(np.uint8)
        seq = FrameSequence(frames, np.arange(4) * 33_333, SensorGeometry(8, 8))
        pairs = paired_samples(seq, IDEAL, 33_333, 1)
        assert 2 <= len(pairs) <= 3
        # every window is paired with the frame at or after its end
        for window, target in pairs:
            idx = int(np.searchsorted(seq.timestamps, window.t_end))
            idx = min(idx, 3)
            assert np.array_equal(target, frames[idx])
