"""STFT phase vocoder with time-varying pitch-shift and time-stretch.

Both transformations are driven by breakpoint functions (sparse (time,
value) pairs evaluated by linear interpolation, constant outside their
span).  Stretch values are log2 duration factors (+1 doubles a region's
duration), pitch values are cents (+100 is one semitone up).

Time stretching resamples the STFT frame sequence at fractional positions
with standard phase propagation; the frame positions come from
integrating the local duration ratio, so the output length equals the
integral of 2^stretch(t) over the input to within a sample.  Pitch
shifting is variable-rate resampling followed by a compensating time
stretch, which keeps duration fixed while scaling the instantaneous
frequency by 2^(cents/1200).

Rendering order for a full trial profile is stretch first, then pitch,
with the pitch breakpoints remapped through the stretch's time warp so
they stay aligned with the acoustic material they were sampled for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from prosorc.audio import AudioBuffer, RenderInfo, clip_to_unit
from prosorc.profiles import TransformProfile

#: Supported transform ranges; values outside are almost certainly bugs
#: upstream (the sampling saturates well inside these).
MAX_ABS_STRETCH_LOG2 = 2.0
MAX_ABS_PITCH_CENTS = 1200.0


@dataclass(frozen=True)
class StftConfig:
    """Analysis/synthesis parameters for the vocoder.

    The default (2048-sample window, quarter-window hop, periodic Hann)
    satisfies constant overlap-add exactly, which `istft` relies on for
    normalization.
    """

    window_size: int = 2048
    hop: int = 512
    window: str = "hann"

    def __post_init__(self):
        if self.window_size < 4 or (self.window_size & (self.window_size - 1)) != 0:
            raise ValueError(f"window_size must be a power of two, got {self.window_size}")
        if not 0 < self.hop <= self.window_size:
            raise ValueError(f"hop must satisfy 0 < hop <= window_size, got {self.hop}")
        get_window(self.window, 8, fftbins=True)  # fail fast on bad identifiers

    @property
    def n_bins(self) -> int:
        return self.window_size // 2 + 1

    def analysis_window(self) -> np.ndarray:
        return np.asarray(get_window(self.window, self.window_size, fftbins=True),
                          dtype=np.float64)

    def cola_gain(self) -> float:
        """Mean overlap-add gain of the squared window at this hop."""
        w2 = self.analysis_window() ** 2
        return float(np.sum(w2) / self.hop)

    def cola_deviation(self) -> float:
        """Max relative deviation of the w^2 overlap-add sum from constant."""
        w2 = self.analysis_window() ** 2
        n_frames = 3 * (self.window_size // self.hop) + 8
        total = (n_frames - 1) * self.hop + self.window_size
        acc = np.zeros(total)
        for k in range(n_frames):
            acc[k * self.hop:k * self.hop + self.window_size] += w2
        interior = acc[self.window_size:total - self.window_size]
        gain = self.cola_gain()
        return float(np.max(np.abs(interior - gain)) / gain)


DEFAULT_STFT = StftConfig()


def _stft_array(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    if len(x) < cfg.window_size:
        raise ValueError(
            f"input too short: {len(x)} samples < window_size {cfg.window_size}")
    n_frames = (len(x) - cfg.window_size) // cfg.hop + 1
    w = cfg.analysis_window()
    idx = cfg.hop * np.arange(n_frames)[:, None] + np.arange(cfg.window_size)[None, :]
    return np.fft.rfft(x[idx] * w, axis=1)


def stft(audio: AudioBuffer, cfg: StftConfig = DEFAULT_STFT) -> np.ndarray:
    """Short-time Fourier transform.

    Returns an (n_frames, window_size/2 + 1) complex array where frame k
    analyzes samples [k*hop, k*hop + window_size); no padding, so
    n_frames = floor((len - window_size)/hop) + 1.
    """
    return _stft_array(audio.samples, cfg)


def _istft_array(frames: np.ndarray, cfg: StftConfig) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.complex128)
    if frames.ndim != 2 or frames.shape[1] != cfg.n_bins:
        raise ValueError(
            f"frame shape {frames.shape} does not match config with {cfg.n_bins} bins")
    w = cfg.analysis_window()
    n_frames = frames.shape[0]
    out = np.zeros((n_frames - 1) * cfg.hop + cfg.window_size)
    chunks = np.fft.irfft(frames, n=cfg.window_size, axis=1) * w
    for k in range(n_frames):
        out[k * cfg.hop:k * cfg.hop + cfg.window_size] += chunks[k]
    return out / cfg.cola_gain()


def istft(frames: np.ndarray, cfg: StftConfig, sample_rate: int) -> AudioBuffer:
    """Weighted overlap-add inverse of :func:`stft`.

    The window is applied on both analysis and synthesis and the result
    divided by the constant overlap-add gain, so the interior of
    istft(stft(x)) reproduces x; the first and last window of samples are
    tapered.
    """
    return AudioBuffer(_istft_array(frames, cfg), sample_rate)


def _phase_vocoder(frames: np.ndarray, positions: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Resample STFT frames at fractional positions with phase propagation.

    Output frame j takes its magnitude from a linear blend of the frames
    around positions[j] and its phase from an accumulator advanced by the
    local per-hop phase increment, which preserves instantaneous
    frequency regardless of how fast the positions advance.
    """
    n_frames, n_bins = frames.shape
    mag = np.abs(frames)
    phase = np.angle(frames)

    # Snap near-integer positions: cumulative-map roundoff can leave a
    # position at j - 1e-13, which would floor to j-1 and replay every
    # phase advance one frame late.
    snapped = np.round(positions)
    positions = np.where(np.abs(positions - snapped) < 1e-6, snapped, positions)

    # Expected phase advance per hop for each bin's center frequency.
    phi_advance = 2.0 * np.pi * cfg.hop * np.arange(n_bins) / cfg.window_size
    if n_frames > 1:
        dphase = np.diff(phase, axis=0) - phi_advance
        dphase -= 2.0 * np.pi * np.round(dphase / (2.0 * np.pi))
        advance = phi_advance + dphase  # (n_frames - 1, n_bins)
    else:
        advance = phi_advance[None, :]

    mag = np.vstack([mag, np.zeros((1, n_bins))])  # fade past the last frame

    out = np.empty((len(positions), n_bins), dtype=np.complex128)
    k0 = min(int(positions[0]), n_frames - 1)
    phase_acc = phase[k0].copy()
    for j, p in enumerate(positions):
        k = min(int(p), n_frames - 1)
        alpha = p - k
        m = (1.0 - alpha) * mag[k] + alpha * mag[k + 1]
        out[j] = m * np.exp(1j * phase_acc)
        phase_acc += advance[min(k, advance.shape[0] - 1)]
    return out


def _as_breakpoint_fn(points, limit: float, errmsg: str):
    """Turn a scalar or (n, 2) breakpoint array into an interpolating callable.

    Values are range-checked against +/-limit.  Evaluation is
    piecewise-linear with constant extrapolation outside the breakpoints.
    """
    if np.isscalar(points):
        v = float(points)
        if abs(v) > limit:
            raise ValueError(f"{errmsg}: |{v}| > {limit}")
        return lambda t: np.full(np.shape(t), v, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise ValueError("breakpoints must be an (n, 2) array of (time_s, value)")
    order = np.argsort(pts[:, 0], kind="stable")
    times, values = pts[order, 0], pts[order, 1]
    if np.max(np.abs(values)) > limit:
        raise ValueError(f"{errmsg}: max |value| {np.max(np.abs(values))} > {limit}")
    return lambda t: np.interp(t, times, values)


def _cumulative_time_map(n_samples: int, sr: int, ratio_fn, pad: int = 0) -> np.ndarray:
    """Output time at each (padded) input sample boundary.

    ratio_fn maps unpadded input time to the local output/input duration
    ratio; sample i of the padded signal spans unpadded time
    (i - pad)/sr.  Returns n_samples + 1 monotone values starting at 0.
    """
    t = (np.arange(n_samples) - pad) / sr
    ratio = np.asarray(ratio_fn(t), dtype=np.float64)
    out = np.empty(n_samples + 1)
    out[0] = 0.0
    np.cumsum(ratio, out=out[1:])
    out[1:] /= sr
    return out


def _stretch_core(x: np.ndarray, sr: int, ratio_fn, cfg: StftConfig) -> np.ndarray:
    """Time-stretch samples by a time-varying duration ratio.

    ratio_fn: input time (s) -> local output/input duration ratio, > 0.
    The input is zero-padded by one window on each side so the returned
    region has full overlap-add coverage end to end.
    """
    pad = cfg.window_size
    x_pad = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    T = _cumulative_time_map(len(x_pad), sr, ratio_fn, pad=pad)

    s_out = int(round(T[pad] * sr))
    l_out = int(round((T[pad + len(x)] - T[pad]) * sr))

    frames = _stft_array(x_pad, cfg)
    n_frames = frames.shape[0]

    n_out = (s_out + l_out) // cfg.hop + 2
    tau = np.arange(n_out) * (cfg.hop / sr)
    sample_times = np.arange(len(x_pad) + 1) / sr
    t_in = np.interp(tau, T, sample_times)
    positions = np.clip(t_in * sr / cfg.hop, 0.0, float(n_frames - 1))

    y = _istft_array(_phase_vocoder(frames, positions, cfg), cfg)
    need = s_out + l_out
    if len(y) < need:
        y = np.pad(y, (0, need - len(y)))
    return y[s_out:need]


def _pitch_core(x: np.ndarray, sr: int, ratio_fn, cfg: StftConfig) -> np.ndarray:
    """Pitch-shift samples by a time-varying frequency ratio, keeping duration.

    Variable-rate resampling scales the instantaneous frequency by
    ratio_fn(t) exactly; the compensating stretch restores the original
    timeline.
    """
    n = len(x)
    boundaries = np.arange(n + 1) / sr
    r = np.asarray(ratio_fn(boundaries[:-1]), dtype=np.float64)
    U = np.empty(n + 1)
    U[0] = 0.0
    np.cumsum(1.0 / r, out=U[1:])
    U[1:] /= sr

    m1 = max(int(round(U[-1] * sr)), 1)
    tau1 = np.arange(m1) / sr
    t_of_tau = np.interp(tau1, U, boundaries)
    y1 = np.interp(t_of_tau * sr, np.arange(n), x)

    def rho_fn(tau):
        return ratio_fn(np.interp(tau, U, boundaries))

    return _stretch_core(y1, sr, rho_fn, cfg)


def time_stretch(audio: AudioBuffer, stretch, cfg: StftConfig = DEFAULT_STFT) -> AudioBuffer:
    """Apply a time-varying duration change.

    stretch is a scalar log2 duration factor or an (n, 2) array of
    (time_s, log2_factor) breakpoints; +1 doubles the local duration.
    Output length equals the integral of 2^stretch(t) over the input to
    within a sample.
    """
    fn_log2 = _as_breakpoint_fn(stretch, MAX_ABS_STRETCH_LOG2, "stretch out of supported range")
    y = _stretch_core(audio.samples, audio.sample_rate,
                      lambda t: np.exp2(fn_log2(t)), cfg)
    return AudioBuffer(clip_to_unit(y)[0], audio.sample_rate)


def pitch_shift(audio: AudioBuffer, pitch, cfg: StftConfig = DEFAULT_STFT) -> AudioBuffer:
    """Apply a time-varying pitch change at constant duration.

    pitch is a scalar offset in cents or an (n, 2) array of
    (time_s, cents) breakpoints; the instantaneous fundamental is
    multiplied by 2^(cents(t)/1200).
    """
    fn_cents = _as_breakpoint_fn(pitch, MAX_ABS_PITCH_CENTS, "shift out of supported range")
    y = _pitch_core(audio.samples, audio.sample_rate,
                    lambda t: np.exp2(fn_cents(t) / 1200.0), cfg)
    return AudioBuffer(clip_to_unit(y)[0], audio.sample_rate)


def render_profile(audio: AudioBuffer, profile: TransformProfile,
                   cfg: StftConfig = DEFAULT_STFT) -> tuple[AudioBuffer, RenderInfo]:
    """Render one trial: stretch by the rate profile, then pitch-shift.

    The pitch profile is defined on the base recording's timeline, so it
    is evaluated through the inverse of the stretch's time warp to stay
    aligned with the material it was sampled for.  Output samples are
    hard-clipped to [-1, 1]; the clip count is reported in RenderInfo.
    """
    x, sr = audio.samples, audio.sample_rate
    stretch_fn = _as_breakpoint_fn(profile.stretch_points, MAX_ABS_STRETCH_LOG2,
                                   "stretch out of supported range")
    pitch_fn = _as_breakpoint_fn(profile.pitch_points, MAX_ABS_PITCH_CENTS,
                                 "shift out of supported range")

    def stretch_ratio(t):
        return np.exp2(stretch_fn(t))

    y1 = _stretch_core(x, sr, stretch_ratio, cfg)

    T = _cumulative_time_map(len(x), sr, stretch_ratio)
    base_times = np.arange(len(x) + 1) / sr

    def pitch_ratio_stretched(tau):
        return np.exp2(pitch_fn(np.interp(tau, T, base_times)) / 1200.0)

    y2 = _pitch_core(y1, sr, pitch_ratio_stretched, cfg)
    clipped, n_clipped = clip_to_unit(y2)
    return AudioBuffer(clipped, sr), RenderInfo(clipped_samples=n_clipped)
