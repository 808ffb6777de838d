"""Shared signal helpers and independent oracles used across tests."""

from __future__ import annotations

import numpy as np

from prosorc.audio import AudioBuffer


def sine(freq_hz: float, duration_s: float, sr: int = 44100,
         amplitude: float = 0.8, phase: float = 0.0) -> AudioBuffer:
    t = np.arange(int(round(duration_s * sr))) / sr
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t + phase), sr)


def sawtooth(freq_hz: float, duration_s: float, sr: int = 44100,
             amplitude: float = 0.6) -> AudioBuffer:
    t = np.arange(int(round(duration_s * sr))) / sr
    phase = (t * freq_hz) % 1.0
    return AudioBuffer(amplitude * (2.0 * phase - 1.0), sr)


def glide(f_start: float, f_end: float, duration_s: float, sr: int = 44100,
          amplitude: float = 0.8) -> AudioBuffer:
    """Linear-frequency glide with a phase-continuous oscillator."""
    n = int(round(duration_s * sr))
    t = np.arange(n) / sr
    inst_freq = f_start + (f_end - f_start) * t / duration_s
    phase = 2 * np.pi * np.cumsum(inst_freq) / sr
    return AudioBuffer(amplitude * np.sin(phase), sr)


def white_noise(duration_s: float, sr: int = 44100, seed: int = 0,
                amplitude: float = 0.5) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sr))
    return AudioBuffer(amplitude * rng.uniform(-1.0, 1.0, n), sr)


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized cross-correlation of two equal-length signals."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    assert a.shape == b.shape, (a.shape, b.shape)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 1.0 if np.allclose(a, b) else 0.0
    return float(np.dot(a, b) / denom)


def interior_correlation(a: np.ndarray, b: np.ndarray, keep: float = 0.8) -> float:
    """Correlation over the central `keep` fraction of both signals."""
    n = min(len(a), len(b))
    lo = int(n * (1 - keep) / 2)
    hi = lo + int(n * keep)
    return correlation(a[lo:hi], b[lo:hi])


def dominant_frequency(audio: AudioBuffer) -> float:
    """FFT-peak frequency with parabolic sub-bin refinement.

    Independent of the vocoder: plain windowed FFT of the whole signal.
    """
    x = audio.samples
    w = np.hanning(len(x))
    spec = np.abs(np.fft.rfft(x * w))
    k = int(np.argmax(spec))
    if 0 < k < len(spec) - 1:
        with np.errstate(divide="ignore"):
            a, b, c = np.log(spec[k - 1:k + 2] + 1e-300)
        denom = a - 2 * b + c
        delta = 0.0 if denom >= 0 else 0.5 * (a - c) / denom
    else:
        delta = 0.0
    return (k + delta) * audio.sample_rate / len(x)


def cents_between(f_measured: float, f_expected: float) -> float:
    return 1200.0 * np.log2(f_measured / f_expected)
