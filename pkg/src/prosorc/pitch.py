"""Autocorrelation f0 tracking and pitch flattening.

The tracker is deliberately simple: frame-wise normalized
autocorrelation, peak picked in the lag range of the f0 search band,
refined by parabolic interpolation.  The raw (tapered) autocorrelation is
used for peak picking because its decay with lag breaks the tie between
the true period and its multiples; the three points around the peak are
un-tapered before the parabolic fit so the refinement is unbiased.

Flattening builds a cents-correction breakpoint function from the track
(zero on unvoiced frames, which therefore pass through unshifted) and
applies it with the phase vocoder's pitch shifter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from prosorc.audio import AudioBuffer
from prosorc.vocoder import DEFAULT_STFT, StftConfig, pitch_shift

#: Normalized-autocorrelation value below which a frame counts as unvoiced.
VOICING_THRESHOLD = 0.3
#: Frame RMS below which a frame is silence, regardless of periodicity.
SILENCE_RMS = 1e-5

DEFAULT_F0_RANGE = (50.0, 600.0)


@dataclass(frozen=True)
class F0Track:
    """Frame-wise fundamental frequency estimates.

    f0 is in Hz per frame, with 0 encoding an unvoiced frame; times are
    the frame-center positions in seconds, strictly increasing.
    """

    times: np.ndarray
    f0: np.ndarray
    frame_hop_s: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        f0 = np.asarray(self.f0, dtype=np.float64)
        if times.shape != f0.shape:
            raise ValueError("times and f0 must have the same shape")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("frame times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "f0", f0)

    @property
    def voiced(self) -> np.ndarray:
        return self.f0 > 0

    @property
    def voiced_fraction(self) -> float:
        return float(np.mean(self.voiced)) if len(self.f0) else 0.0


def _frame_f0(frame: np.ndarray, sr: int, lag_min: int, lag_max: int) -> float:
    """f0 of one frame, or 0.0 if unvoiced."""
    frame = frame - frame.mean()
    rms = np.sqrt(np.mean(frame ** 2))
    if rms < SILENCE_RMS:
        return 0.0

    n = len(frame)
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(frame, nfft)
    ac = np.fft.irfft(spec * np.conj(spec), nfft)[:lag_max + 2]
    if ac[0] <= 0:
        return 0.0
    nac = ac / ac[0]

    lo = max(lag_min, 1)
    hi = min(lag_max, n - 2)
    if hi <= lo:
        return 0.0
    peak = lo + int(np.argmax(nac[lo:hi + 1]))
    if nac[peak] < VOICING_THRESHOLD:
        return 0.0

    # Un-taper the three points around the peak (the raw estimate scales
    # by (n - lag)/n) so the parabolic fit is not biased toward short lags.
    lags = np.array([peak - 1, peak, peak + 1], dtype=np.float64)
    vals = ac[peak - 1:peak + 2] * n / (n - lags)
    denom = vals[0] - 2.0 * vals[1] + vals[2]
    delta = 0.0 if denom >= 0 else 0.5 * (vals[0] - vals[2]) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    return sr / (peak + delta)


def estimate_f0(audio: AudioBuffer, frame_hop_s: float = 0.01,
                f0_range: tuple[float, float] = DEFAULT_F0_RANGE) -> F0Track:
    """Frame-wise autocorrelation f0 track.

    Frames are three periods of the lowest searchable f0; estimates
    outside f0_range are rejected as unvoiced.
    """
    f0_min, f0_max = f0_range
    if not 0 < f0_min < f0_max:
        raise ValueError(f"invalid f0 range {f0_range}")
    x, sr = audio.samples, audio.sample_rate
    if len(x) == 0:
        raise ValueError("empty audio")

    frame_len = int(round(3 * sr / f0_min))
    if len(x) < frame_len:
        raise ValueError(
            f"audio too short for f0 analysis: need >= {frame_len} samples "
            f"(3 periods of {f0_min} Hz), got {len(x)}")
    hop = max(int(round(frame_hop_s * sr)), 1)
    lag_min = int(np.floor(sr / f0_max))
    lag_max = int(np.ceil(sr / f0_min))

    n_frames = (len(x) - frame_len) // hop + 1
    times = (np.arange(n_frames) * hop + frame_len / 2) / sr
    f0 = np.zeros(n_frames)
    for k in range(n_frames):
        est = _frame_f0(x[k * hop:k * hop + frame_len], sr, lag_min, lag_max)
        if f0_min <= est <= f0_max:
            f0[k] = est
    return F0Track(times=times, f0=f0, frame_hop_s=hop / sr)


def flatten_pitch(audio: AudioBuffer, target_hz: float = 120.0,
                  cfg: StftConfig = DEFAULT_STFT, frame_hop_s: float = 0.01,
                  f0_range: tuple[float, float] = DEFAULT_F0_RANGE) -> AudioBuffer:
    """Re-render the audio with its voiced pitch contour pinned to target_hz.

    Unvoiced frames get a zero correction and pass through unshifted.
    Raises if no voiced frames are found.
    """
    track = estimate_f0(audio, frame_hop_s=frame_hop_s, f0_range=f0_range)
    voiced = track.voiced
    if not np.any(voiced):
        raise ValueError("cannot flatten unvoiced audio: no voiced frames detected")

    cents = np.zeros(len(track.f0))
    cents[voiced] = 1200.0 * np.log2(target_hz / track.f0[voiced])
    cents = np.clip(cents, -1199.0, 1199.0)
    points = np.column_stack([track.times, cents])
    return pitch_shift(audio, points, cfg)
