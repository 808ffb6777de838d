import numpy as np
import pytest

from prosorc.audio import AudioBuffer
from prosorc.splicing import find_zero_crossing, insert_target

from helpers import sine


def silence(duration_s, sr=44100):
    return AudioBuffer(np.zeros(int(round(duration_s * sr))), sr)


class TestFindZeroCrossing:
    def test_exact_zero_sample(self):
        x = np.array([0.5, 0.3, 0.0, -0.2])
        assert find_zero_crossing(x, 0, 10) == 2

    def test_sign_change(self):
        x = np.array([0.5, 0.3, 0.1, -0.2, -0.4])
        assert find_zero_crossing(x, 1, 10) == 3

    def test_start_at_crossing(self):
        x = np.zeros(10)
        assert find_zero_crossing(x, 4, 5) == 4

    def test_no_crossing_raises(self):
        x = np.ones(1000)
        with pytest.raises(ValueError, match="no zero-crossing"):
            find_zero_crossing(x, 0, 100)


class TestInsertTarget:
    def test_silence_gap_law(self):
        # marker at 0.5 s, 120 ms gap: word starts exactly at the target in silence
        phrase = silence(2.0)
        word = sine(300.0, 0.3)
        marker = 22050
        out, start = insert_target(phrase, word, marker, gap_ms=120.0)
        expected = marker + round(0.120 * 44100)
        assert start == expected
        assert np.all(out.samples[:start] == 0.0)
        np.testing.assert_array_equal(out.samples[start:], word.samples)
        assert len(out) == start + len(word)

    def test_zero_gap(self):
        phrase = silence(1.0)
        word = sine(250.0, 0.2)
        out, start = insert_target(phrase, word, 11025, gap_ms=0.0)
        assert start == 11025
        assert len(out) == start + len(word)

    def test_tonal_tail_snaps_to_zero_crossing(self):
        # 1 kHz tail: crossings every 0.5 ms, so the splice moves under 0.5 ms
        phrase = sine(1000.0, 1.0)
        word = sine(300.0, 0.2)
        marker = 22050
        out, start = insert_target(phrase, word, marker, gap_ms=120.0)
        target = marker + round(0.120 * 44100)
        assert 0 <= start - target <= int(0.0005 * 44100) + 1
        before = phrase.samples[start - 1]
        at = phrase.samples[start] if start < len(phrase) else 0.0
        assert at == 0.0 or before * at < 0.0 or before == 0.0

    def test_rate_mismatch_rejected(self):
        phrase = silence(1.0, sr=44100)
        word = AudioBuffer(np.zeros(4410), 22050)
        with pytest.raises(ValueError, match="sample-rate mismatch"):
            insert_target(phrase, word, 1000)

    def test_marker_out_of_bounds(self):
        phrase = silence(1.0)
        word = sine(250.0, 0.2)
        with pytest.raises(ValueError):
            insert_target(phrase, word, -1)
        with pytest.raises(ValueError):
            insert_target(phrase, word, len(phrase))

    def test_gap_beyond_end_rejected(self):
        phrase = silence(0.2)
        word = sine(250.0, 0.1)
        with pytest.raises(ValueError, match="beyond the end"):
            insert_target(phrase, word, len(phrase) - 10, gap_ms=500.0)

    def test_phrase_head_is_untouched(self):
        rng = np.random.default_rng(6)
        phrase = AudioBuffer(rng.uniform(-0.5, 0.5, 44100), 44100)
        word = sine(300.0, 0.1)
        out, start = insert_target(phrase, word, 2000, gap_ms=10.0)
        np.testing.assert_array_equal(out.samples[:start], phrase.samples[:start])
