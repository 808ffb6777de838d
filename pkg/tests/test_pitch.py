import numpy as np
import pytest

from prosorc.audio import AudioBuffer
from prosorc.pitch import estimate_f0, flatten_pitch

from helpers import glide, sawtooth, sine


class TestEstimateF0:
    def test_pure_tone(self):
        track = estimate_f0(sine(220.0, 1.0))
        voiced = track.f0[track.voiced]
        assert voiced.size > 0.9 * track.f0.size
        assert np.all(np.abs(voiced - 220.0) <= 1.0)

    def test_low_tone(self):
        track = estimate_f0(sine(100.0, 1.0))
        voiced = track.f0[track.voiced]
        assert np.all(np.abs(voiced - 100.0) <= 1.0)

    def test_silence_is_unvoiced(self):
        track = estimate_f0(AudioBuffer(np.zeros(44100), 44100))
        assert track.voiced_fraction == 0.0

    def test_sawtooth_no_octave_errors(self):
        # harmonically rich input must not lock onto a multiple of the period
        track = estimate_f0(sawtooth(150.0, 1.0))
        voiced = track.f0[track.voiced]
        assert voiced.size > 0.9 * track.f0.size
        assert np.all(np.abs(voiced - 150.0) <= 2.0)

    def test_glide_tracks_trajectory(self):
        buf = glide(120.0, 240.0, 1.0)
        track = estimate_f0(buf)
        voiced = track.voiced
        expected = 120.0 + (240.0 - 120.0) * track.times[voiced] / buf.duration_s
        assert np.all(np.abs(track.f0[voiced] - expected) <= 6.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty audio"):
            estimate_f0(AudioBuffer(np.zeros(0), 44100))

    def test_too_short_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            estimate_f0(AudioBuffer(np.zeros(100), 44100))

    def test_range_is_validated(self):
        with pytest.raises(ValueError):
            estimate_f0(sine(220.0, 0.5), f0_range=(600.0, 50.0))

    def test_track_times_monotone(self):
        track = estimate_f0(sine(220.0, 0.5))
        assert np.all(np.diff(track.times) > 0)


class TestFlattenPitch:
    def test_sawtooth_lands_on_target(self):
        flat = flatten_pitch(sawtooth(150.0, 1.0), target_hz=120.0)
        track = estimate_f0(flat)
        voiced = track.f0[track.voiced]
        assert voiced.size > 0
        interior = voiced[2:-2] if voiced.size > 8 else voiced
        assert abs(np.median(interior) - 120.0) <= 2.0

    def test_upward_flatten(self):
        flat = flatten_pitch(sine(100.0, 1.0), target_hz=120.0)
        track = estimate_f0(flat)
        voiced = track.f0[track.voiced]
        assert abs(np.median(voiced) - 120.0) <= 2.0

    def test_glide_becomes_monotone(self):
        # 100 -> 180 Hz sweep should collapse to a flat contour
        flat = flatten_pitch(glide(100.0, 180.0, 1.0), target_hz=120.0)
        track = estimate_f0(flat)
        voiced = track.f0[track.voiced]
        assert voiced.size > 0
        interior = voiced[3:-3] if voiced.size > 12 else voiced
        cents = 1200.0 * np.log2(interior / 120.0)
        assert np.std(cents) < 10.0
        assert abs(np.median(interior) - 120.0) <= 3.0

    def test_unvoiced_input_rejected(self):
        with pytest.raises(ValueError, match="cannot flatten unvoiced audio"):
            flatten_pitch(AudioBuffer(np.zeros(44100), 44100))

    def test_duration_preserved(self):
        buf = sawtooth(150.0, 1.0)
        flat = flatten_pitch(buf, target_hz=120.0)
        assert abs(len(flat) - len(buf)) <= 1024
