"""Mono audio container and WAV file I/O.

All DSP in this package operates on :class:`AudioBuffer`: a float64 numpy
array of samples in [-1, 1] plus a sample rate.  WAV files are read and
written through :mod:`scipy.io.wavfile` in 16-bit PCM or 32-bit float,
always mono.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile


@dataclass(frozen=True)
class AudioBuffer:
    """A mono sampled waveform.

    Parameters
    ----------
    samples : np.ndarray
        1-D float array of amplitudes. Finite; rendering operations keep
        them within [-1, 1] (see :func:`clip_to_unit`).
    sample_rate : int
        Sampling frequency in Hz, > 0.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"audio must be mono, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def time_axis(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


def clip_to_unit(samples: np.ndarray) -> tuple[np.ndarray, int]:
    """Hard-clip samples to [-1, 1] and count how many were touched.

    Rendering keeps WAV output valid while making distortion observable:
    the clip count is surfaced in render metadata rather than silently
    discarded.
    """
    clipped = np.clip(samples, -1.0, 1.0)
    n_clipped = int(np.count_nonzero(clipped != samples))
    return clipped, n_clipped


@dataclass
class RenderInfo:
    """Metadata from a rendering operation (currently just clipping)."""

    clipped_samples: int = 0

    def merge(self, other: "RenderInfo") -> "RenderInfo":
        return RenderInfo(clipped_samples=self.clipped_samples + other.clipped_samples)


def read_wav(path) -> AudioBuffer:
    """Read a mono WAV file (PCM 16-bit or float-32) into an AudioBuffer.

    Integer PCM is rescaled to [-1, 1]; float data is taken as-is.
    """
    sample_rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {data.ndim} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}")
    return AudioBuffer(samples=samples, sample_rate=int(sample_rate))


def write_wav(path, audio: AudioBuffer, fmt: str = "float32") -> int:
    """Write an AudioBuffer as a mono WAV file.

    Parameters
    ----------
    fmt : {"float32", "pcm16"}
        Output sample encoding.

    Returns
    -------
    int
        Number of samples that had to be clipped into [-1, 1].
    """
    samples, n_clipped = clip_to_unit(audio.samples)
    if fmt == "float32":
        wavfile.write(path, audio.sample_rate, samples.astype(np.float32))
    elif fmt == "pcm16":
        # same 32768 scale as read_wav so a round trip stays within half an LSB
        pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
        wavfile.write(path, audio.sample_rate, pcm)
    else:
        raise ValueError(f"unsupported WAV format {fmt!r}")
    return n_clipped
