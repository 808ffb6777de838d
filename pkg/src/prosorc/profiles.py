"""Per-trial random pitch/rate breakpoint profiles.

Each trial manipulates the base recording in n successive 100 ms windows
(n=4 for isolated words, n=13 for phrases).  For every window, a pitch
offset (cents) and a duration factor (log2 units) are drawn independently
from zero-mean Gaussians and saturated at +/-2 sigma, so the rate extremes
are exactly a doubling or halving of the window's duration.  Between
window centers the values are linearly interpolated, which is what makes
the transformations sound natural rather than stepped.

Determinism matters: a profile is a pure function of (spec, seed), and the
seed for trial i is derived from the session master seed as
``master_seed XOR i`` so stimuli can be regenerated from the response log
alone.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

#: Number of 100 ms manipulation windows per stimulus kind.
SEGMENTS_PER_KIND = {"word": 4, "phrase": 13}

_SEED_MASK = (1 << 64) - 1


def segment_count_for(kind: str) -> int:
    """Number of manipulation windows for a stimulus kind ('word' or 'phrase')."""
    try:
        return SEGMENTS_PER_KIND[kind]
    except KeyError:
        raise ValueError(f"unknown stimulus kind {kind!r}; expected 'word' or 'phrase'") from None


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Seed for one trial's profile: master_seed XOR trial_index (64-bit)."""
    return (int(master_seed) ^ int(trial_index)) & _SEED_MASK


@dataclass(frozen=True)
class SamplingSpec:
    """How to draw one trial's random transformation profile.

    Defaults follow the stimulus-generation recipe: 100 ms windows,
    pitch sigma of 100 cents (one semitone), rate sigma of 0.5 log2 units,
    both saturated at +/-2 sigma.
    """

    num_windows: int
    window_duration_s: float = 0.1
    pitch_sigma_cents: float = 100.0
    rate_sigma_log2: float = 0.5
    clip_sigmas: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.num_windows < 1:
            raise ValueError("num_windows must be >= 1")
        if self.pitch_sigma_cents <= 0 or self.rate_sigma_log2 <= 0:
            raise ValueError("sigmas must be > 0")
        if self.clip_sigmas <= 0:
            raise ValueError("clip_sigmas must be > 0")
        if self.window_duration_s <= 0:
            raise ValueError("window_duration_s must be > 0")

    @classmethod
    def for_kind(cls, kind: str, seed: int = 0, **kwargs) -> "SamplingSpec":
        return cls(num_windows=segment_count_for(kind), seed=seed, **kwargs)

    def with_seed(self, seed: int) -> "SamplingSpec":
        return SamplingSpec(num_windows=self.num_windows,
                            window_duration_s=self.window_duration_s,
                            pitch_sigma_cents=self.pitch_sigma_cents,
                            rate_sigma_log2=self.rate_sigma_log2,
                            clip_sigmas=self.clip_sigmas, seed=seed)

    def breakpoint_times(self) -> np.ndarray:
        """Window-center times (k + 0.5) * window_duration_s."""
        return (np.arange(self.num_windows) + 0.5) * self.window_duration_s


@dataclass(frozen=True)
class TransformProfile:
    """One trial's sampled pitch and stretch breakpoint functions.

    pitch_points and stretch_points are (time_s, value) pairs at the
    window centers; pitch values are in cents, stretch values in log2
    duration factors.
    """

    pitch_points: np.ndarray
    stretch_points: np.ndarray
    seed: int

    def __post_init__(self):
        pitch = np.asarray(self.pitch_points, dtype=np.float64)
        stretch = np.asarray(self.stretch_points, dtype=np.float64)
        for name, pts in (("pitch_points", pitch), ("stretch_points", stretch)):
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ValueError(f"{name} must be an (n, 2) array of (time, value)")
        if pitch.shape[0] != stretch.shape[0]:
            raise ValueError("pitch and stretch must have the same number of breakpoints")
        object.__setattr__(self, "pitch_points", pitch)
        object.__setattr__(self, "stretch_points", stretch)

    @property
    def num_windows(self) -> int:
        return self.pitch_points.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.pitch_points[:, 0]

    @property
    def pitch_cents(self) -> np.ndarray:
        return self.pitch_points[:, 1]

    @property
    def stretch_log2(self) -> np.ndarray:
        return self.stretch_points[:, 1]

    def pitch_at(self, t) -> np.ndarray:
        """Pitch offset (cents) at time(s) t, linearly interpolated.

        Constant extrapolation before the first and after the last
        breakpoint.
        """
        return np.interp(t, self.pitch_points[:, 0], self.pitch_points[:, 1])

    def stretch_at(self, t) -> np.ndarray:
        """log2 duration factor at time(s) t, linearly interpolated."""
        return np.interp(t, self.stretch_points[:, 0], self.stretch_points[:, 1])

    def to_json_dict(self, trial_index: int | None = None) -> dict:
        doc = {
            "seed": int(self.seed),
            "pitch_points": [[float(t), float(v)] for t, v in self.pitch_points],
            "stretch_points": [[float(t), float(v)] for t, v in self.stretch_points],
        }
        if trial_index is not None:
            doc = {"trial_index": int(trial_index), **doc}
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TransformProfile":
        return cls(
            pitch_points=np.asarray(doc["pitch_points"], dtype=np.float64),
            stretch_points=np.asarray(doc["stretch_points"], dtype=np.float64),
            seed=int(doc["seed"]),
        )


def interpolate(profile: TransformProfile, t) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate (pitch_cents, stretch_log2) at time(s) t."""
    return profile.pitch_at(t), profile.stretch_at(t)


def sample_saturated_gaussian(rng: np.random.Generator, sigma: float,
                              clip_sigmas: float, n: int) -> np.ndarray:
    """Draw n values from N(0, sigma^2) and saturate at +/-clip_sigmas*sigma.

    Saturation (pinning to the bound) rather than rejection keeps
    probability mass at the extremes, so a doubling/halving of duration is
    actually attainable.
    """
    bound = clip_sigmas * sigma
    return np.clip(rng.normal(0.0, sigma, size=n), -bound, bound)


def sample_profile(spec: SamplingSpec) -> TransformProfile:
    """Draw one trial's TransformProfile; deterministic given spec.seed."""
    rng = np.random.default_rng(spec.seed)
    times = spec.breakpoint_times()
    pitch = sample_saturated_gaussian(rng, spec.pitch_sigma_cents, spec.clip_sigmas,
                                      spec.num_windows)
    stretch = sample_saturated_gaussian(rng, spec.rate_sigma_log2, spec.clip_sigmas,
                                        spec.num_windows)
    return TransformProfile(
        pitch_points=np.column_stack([times, pitch]),
        stretch_points=np.column_stack([times, stretch]),
        seed=spec.seed,
    )


def saturated_gaussian_cdf(x, sigma: float, clip_sigmas: float):
    """CDF of the saturated Gaussian: reference for distribution tests.

    Has atoms at +/-clip_sigmas*sigma, a Gaussian body in between.
    """
    from scipy.stats import norm

    x = np.asarray(x, dtype=np.float64)
    bound = clip_sigmas * sigma
    out = norm.cdf(x / sigma)
    out = np.where(x < bound, out, 1.0)
    out = np.where(x >= -bound, out, 0.0)
    return out


def write_profiles_json(profiles, out_dir) -> list[Path]:
    """Write one JSON document per trial: trial_NNNN.json in out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, profile in enumerate(profiles):
        path = out_dir / f"trial_{i:04d}.json"
        path.write_text(json.dumps(profile.to_json_dict(trial_index=i), indent=2) + "\n")
        paths.append(path)
    return paths


def write_profiles_csv(profiles, path) -> None:
    """Write a flat CSV: one row per trial, pitch_0..pitch_{n-1}, stretch_0..stretch_{n-1}."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("no profiles to write")
    n = profiles[0].num_windows
    header = (["trial_index", "seed"]
              + [f"pitch_{k}" for k in range(n)]
              + [f"stretch_{k}" for k in range(n)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, p in enumerate(profiles):
            if p.num_windows != n:
                raise ValueError("profiles have inconsistent window counts")
            row = ([i, int(p.seed)]
                   + [repr(float(v)) for v in p.pitch_cents]
                   + [repr(float(v)) for v in p.stretch_log2])
            writer.writerow(row)


def read_profiles_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a profile CSV back as (trial_indices, pitch matrix, stretch matrix).

    The matrices are (n_trials, num_windows) arrays in file row order.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        pitch_cols = [i for i, name in enumerate(header) if name.startswith("pitch_")]
        stretch_cols = [i for i, name in enumerate(header) if name.startswith("stretch_")]
        idx_col = header.index("trial_index")
        if not pitch_cols or not stretch_cols:
            raise ValueError(f"{path}: not a profile CSV (missing pitch_/stretch_ columns)")
        indices, pitch_rows, stretch_rows = [], [], []
        for row in reader:
            indices.append(int(row[idx_col]))
            pitch_rows.append([float(row[i]) for i in pitch_cols])
            stretch_rows.append([float(row[i]) for i in stretch_cols])
    return (np.asarray(indices, dtype=np.int64),
            np.asarray(pitch_rows, dtype=np.float64),
            np.asarray(stretch_rows, dtype=np.float64))
