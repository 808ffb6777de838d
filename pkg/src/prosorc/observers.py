"""Simulated listeners with known linear decision templates.

These observers are the ground truth for validating kernel recovery: a
linear template observer's expected classification-image kernel is
proportional to its template, so recovering the template from simulated
responses exercises the whole sampling -> response -> analysis chain
with a known answer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from prosorc.profiles import TransformProfile


@dataclass(frozen=True)
class LinearTemplateObserver:
    """Decision model: weighted sum of profile values plus Gaussian noise.

    The decision variable is
        d = pitch_template . pitch_cents + rate_template . stretch_log2
            + Normal(0, noise_sd) + bias
    and the observer answers the first option when d > 0, otherwise the
    second.  Raw profile units (cents, log2 factors) keep the model
    analytically transparent.
    """

    pitch_template: np.ndarray
    rate_template: np.ndarray
    noise_sd: float = 0.0
    bias: float = 0.0

    def __post_init__(self):
        pt = np.asarray(self.pitch_template, dtype=np.float64)
        rt = np.asarray(self.rate_template, dtype=np.float64)
        if pt.ndim != 1 or rt.ndim != 1:
            raise ValueError("templates must be 1-D arrays")
        if pt.size != rt.size:
            raise ValueError(
                f"template dim mismatch: pitch {pt.size} vs rate {rt.size}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        object.__setattr__(self, "pitch_template", pt)
        object.__setattr__(self, "rate_template", rt)

    @property
    def num_segments(self) -> int:
        return self.pitch_template.size

    def to_json_dict(self) -> dict:
        return {
            "pitch_template": self.pitch_template.tolist(),
            "rate_template": self.rate_template.tolist(),
            "noise_sd": float(self.noise_sd),
            "bias": float(self.bias),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LinearTemplateObserver":
        return cls(
            pitch_template=np.asarray(doc["pitch_template"], dtype=np.float64),
            rate_template=np.asarray(doc["rate_template"], dtype=np.float64),
            noise_sd=float(doc.get("noise_sd", 0.0)),
            bias=float(doc.get("bias", 0.0)),
        )


def read_observer_json(path) -> LinearTemplateObserver:
    with open(path) as fh:
        return LinearTemplateObserver.from_json_dict(json.load(fh))


def decide(observer: LinearTemplateObserver, profile: TransformProfile,
           rng: np.random.Generator, options: tuple[str, str] = ("A", "B")) -> str:
    """One 2AFC decision for one trial profile."""
    if profile.num_windows != observer.num_segments:
        raise ValueError(
            f"dim mismatch: observer expects {observer.num_segments} segments, "
            f"profile has {profile.num_windows}")
    d = (float(observer.pitch_template @ profile.pitch_cents)
         + float(observer.rate_template @ profile.stretch_log2)
         + rng.normal(0.0, observer.noise_sd)
         + observer.bias)
    return options[0] if d > 0 else options[1]


def decide_batch(observer: LinearTemplateObserver, pitch: np.ndarray,
                 stretch: np.ndarray, rng: np.random.Generator,
                 options: tuple[str, str] = ("A", "B")) -> np.ndarray:
    """Vectorized decisions over (n_trials, n_segments) profile matrices.

    Equivalent to one decide() per row with a fresh noise draw each,
    but orders of magnitude faster for recovery simulations.
    """
    pitch = np.asarray(pitch, dtype=np.float64)
    stretch = np.asarray(stretch, dtype=np.float64)
    if pitch.shape[1] != observer.num_segments or stretch.shape[1] != observer.num_segments:
        raise ValueError(
            f"dim mismatch: observer expects {observer.num_segments} segments, "
            f"got pitch {pitch.shape} and stretch {stretch.shape}")
    d = (pitch @ observer.pitch_template + stretch @ observer.rate_template
         + rng.normal(0.0, observer.noise_sd, size=pitch.shape[0])
         + observer.bias)
    return np.where(d > 0, options[0], options[1])


def simulate_session(observer: LinearTemplateObserver, session,
                     rng: np.random.Generator, record: bool = True) -> list:
    """Answer a session's remaining trials with the observer.

    One decide() per unanswered trial, in order, with rt_ms = 0; by
    default each response is recorded (persisted) on the session.
    Returns the new ResponseRecords, deterministic given the rng state.
    """
    from prosorc.experiment import ResponseRecord, record_response

    out = []
    for trial in session.trials[session.answered:]:
        choice = decide(observer, trial.profile, rng, options=session.option_labels)
        if record:
            out.append(record_response(session, trial.trial_index, choice,
                                       rt_ms=0.0))
        else:
            out.append(ResponseRecord(trial_index=trial.trial_index,
                                      choice=choice, rt_ms=0.0,
                                      timestamp="1970-01-01T00:00:00.000Z"))
    return out


def normalized_template(observer: LinearTemplateObserver) -> np.ndarray:
    """Observer template in the kernels' comparison space.

    Kernel pairs are normalized per domain, which discards the relative
    scale between pitch and rate, so recovered kernels can only be
    compared with the template after the same per-domain normalization:
    each block is scaled to unit length (an all-zero block stays zero).
    """
    blocks = []
    for block in (observer.pitch_template, observer.rate_template):
        norm = np.linalg.norm(block)
        blocks.append(block / norm if norm > 0 else block)
    return np.concatenate(blocks)


def decision_variable_sd(observer: LinearTemplateObserver,
                         pitch_sigma_cents: float = 100.0,
                         rate_sigma_log2: float = 0.5,
                         clip_sigmas: float = 2.0,
                         n_probe: int = 200_000, seed: int = 0) -> float:
    """SD of the pre-noise decision variable under the stimulus sampling.

    Monte-Carlo over saturated-Gaussian draws; used to pick a noise_sd
    that matches the signal the observer actually sees.
    """
    rng = np.random.default_rng(seed)
    k = observer.num_segments
    pb = clip_sigmas * pitch_sigma_cents
    rb = clip_sigmas * rate_sigma_log2
    pitch = np.clip(rng.normal(0.0, pitch_sigma_cents, (n_probe, k)), -pb, pb)
    stretch = np.clip(rng.normal(0.0, rate_sigma_log2, (n_probe, k)), -rb, rb)
    d = pitch @ observer.pitch_template + stretch @ observer.rate_template
    return float(np.std(d))
