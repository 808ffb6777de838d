"""Splicing a target word into its carrier phrase.

The word is inserted at the first zero-crossing at or after a fixed gap
(default 120 ms) past the end of the phrase's last word; cutting at a
zero-crossing avoids a click at the joint.  The phrase tail beyond the
insertion point is dropped, so the output ends with the word.
"""

from __future__ import annotations

import numpy as np

from prosorc.audio import AudioBuffer

#: How far past the target point to scan before giving up.
ZERO_CROSSING_SEARCH_MS = 10.0


def find_zero_crossing(samples: np.ndarray, start: int, max_ahead: int) -> int:
    """Index of the first zero-crossing at or after `start`.

    A crossing at index i means samples[i] == 0 or the sign changes
    between i-1 and i.  Raises if none is found within max_ahead samples.
    """
    stop = min(start + max_ahead + 1, len(samples))
    for i in range(start, stop):
        if samples[i] == 0.0:
            return i
        if i > 0 and samples[i - 1] * samples[i] < 0:
            return i
    raise ValueError(
        f"no zero-crossing within {max_ahead} samples after index {start}")


def insert_target(phrase: AudioBuffer, word: AudioBuffer, marker_index: int,
                  gap_ms: float = 120.0) -> tuple[AudioBuffer, int]:
    """Splice `word` into `phrase` after its last-word offset marker.

    Parameters
    ----------
    marker_index : int
        Sample index of the end of the phrase's last word.
    gap_ms : float
        Silence to leave between the marker and the word onset.

    Returns
    -------
    (AudioBuffer, int)
        The spliced audio and the word's start index in it.
    """
    if phrase.sample_rate != word.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: phrase {phrase.sample_rate} Hz vs "
            f"word {word.sample_rate} Hz")
    if not 0 <= marker_index < len(phrase):
        raise ValueError(f"marker index {marker_index} outside phrase")

    sr = phrase.sample_rate
    target = marker_index + int(round(gap_ms * sr / 1000.0))
    if target >= len(phrase):
        raise ValueError("marker + gap lies beyond the end of the phrase")

    max_ahead = int(round(ZERO_CROSSING_SEARCH_MS * sr / 1000.0))
    start = find_zero_crossing(phrase.samples, target, max_ahead)
    out = np.concatenate([phrase.samples[:start], word.samples])
    return AudioBuffer(out, sr), start
