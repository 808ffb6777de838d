"""Reproducible 2AFC listening sessions with crash-safe persistence.

A session is a directory: an immutable manifest (identity, option order,
per-trial seeds), pre-rendered stimulus audio, the trial profiles, and
an append-only JSONL response log.  Everything except the log is written
once at build time and never mutated, so a session is fully
reconstructable from {stimulus, master_seed, sampling spec} and the log
survives a process kill between trials.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from prosorc.audio import AudioBuffer, read_wav, write_wav
from prosorc.profiles import (
    SamplingSpec,
    TransformProfile,
    derive_trial_seed,
    sample_profile,
    segment_count_for,
    write_profiles_csv,
    write_profiles_json,
)
from prosorc.vocoder import DEFAULT_STFT, StftConfig, render_profile

MANIFEST_NAME = "manifest.json"
RESPONSES_NAME = "responses.jsonl"
BASE_AUDIO_NAME = "base.wav"


@dataclass(frozen=True)
class StimulusSet:
    """One base recording plus the 2AFC labels it disambiguates."""

    id: str
    base_audio: AudioBuffer
    kind: str
    option_labels: tuple[str, str]
    target_onset_s: float = 0.0

    def __post_init__(self):
        segment_count_for(self.kind)  # validates the kind name
        a, b = self.option_labels
        if not a or not b or a == b:
            raise ValueError(f"option labels must be distinct and non-empty, got {self.option_labels!r}")
        if not 0 <= self.target_onset_s < self.base_audio.duration_s:
            raise ValueError(
                f"target_onset_s {self.target_onset_s} outside base audio "
                f"duration {self.base_audio.duration_s:.3f}")


@dataclass(frozen=True)
class TrialPlan:
    """One trial: its seed, regenerable profile, and rendered audio file."""

    trial_index: int
    seed: int
    profile: TransformProfile
    stimulus_path: str  # relative to the session directory


@dataclass(frozen=True)
class ResponseRecord:
    trial_index: int
    choice: str
    rt_ms: float
    timestamp: str

    def __post_init__(self):
        if self.rt_ms < 0:
            raise ValueError(f"rt_ms must be >= 0, got {self.rt_ms}")

    def to_json_dict(self) -> dict:
        return {"trial_index": self.trial_index, "choice": self.choice,
                "rt_ms": self.rt_ms, "timestamp": self.timestamp}


@dataclass
class Session:
    """A session directory's state: immutable plan plus recorded responses."""

    directory: Path
    session_id: str
    participant_id: str
    stimulus_id: str
    kind: str
    option_labels: tuple[str, str]
    target_onset_s: float
    option_order: str  # "AB" or "BA"
    n_trials: int
    master_seed: int
    sampling: SamplingSpec
    trials: list[TrialPlan]
    responses: list[ResponseRecord] = field(default_factory=list)

    @property
    def answered(self) -> int:
        return len(self.responses)

    @property
    def status(self) -> str:
        if self.answered == 0:
            return "created"
        if self.answered < self.n_trials:
            return "running"
        return "complete"

    @property
    def presented_options(self) -> tuple[str, str]:
        """Option labels in on-screen order (left, right)."""
        a, b = self.option_labels
        return (a, b) if self.option_order == "AB" else (b, a)

    def trial_audio_path(self, trial_index: int) -> Path:
        return self.directory / self.trials[trial_index].stimulus_path

    @property
    def responses_path(self) -> Path:
        return self.directory / RESPONSES_NAME


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace(
        "+00:00", "Z")


def build_session(stimulus: StimulusSet, out_dir, n_trials: int = 250,
                  master_seed: int = 0, participant_id: str = "anonymous",
                  session_id: str | None = None,
                  sampling: SamplingSpec | None = None,
                  cfg: StftConfig = DEFAULT_STFT) -> Session:
    """Render all trials and write a complete session directory.

    Per-trial seeds are derived from master_seed (seed XOR trial_index),
    so the whole session is reproducible bit for bit; the manifest holds
    no timestamps for the same reason.  option_order is drawn from the
    session-level RNG seeded with master_seed.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if sampling is None:
        sampling = SamplingSpec.for_kind(stimulus.kind)
    if sampling.num_windows != segment_count_for(stimulus.kind):
        raise ValueError(
            f"sampling spec has {sampling.num_windows} windows but kind "
            f"{stimulus.kind!r} requires {segment_count_for(stimulus.kind)}")
    if session_id is None:
        session_id = f"{stimulus.id}-{master_seed:016x}"

    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    (out_dir / "profiles").mkdir(exist_ok=True)

    rng = np.random.default_rng(master_seed)
    option_order = "AB" if rng.random() < 0.5 else "BA"

    write_wav(out_dir / BASE_AUDIO_NAME, stimulus.base_audio, fmt="pcm16")

    trials = []
    profiles = []
    for i in range(n_trials):
        seed = derive_trial_seed(master_seed, i)
        profile = sample_profile(sampling.with_seed(seed))
        rel = f"audio/trial_{i:04d}.wav"
        try:
            rendered, _ = render_profile(stimulus.base_audio, profile, cfg)
        except Exception as exc:
            raise RuntimeError(f"render failed at trial {i}: {exc}") from exc
        write_wav(out_dir / rel, rendered, fmt="pcm16")
        trials.append(TrialPlan(trial_index=i, seed=seed, profile=profile,
                                stimulus_path=rel))
        profiles.append(profile)

    write_profiles_json(profiles, out_dir / "profiles")
    write_profiles_csv(profiles, out_dir / "profiles.csv")

    manifest = {
        "session_id": session_id,
        "participant_id": participant_id,
        "stimulus": {
            "id": stimulus.id,
            "kind": stimulus.kind,
            "option_labels": list(stimulus.option_labels),
            "target_onset_s": stimulus.target_onset_s,
            "base_audio": BASE_AUDIO_NAME,
        },
        "option_order": option_order,
        "n_trials": n_trials,
        "master_seed": master_seed,
        "sampling": {
            "num_windows": sampling.num_windows,
            "window_duration_s": sampling.window_duration_s,
            "pitch_sigma_cents": sampling.pitch_sigma_cents,
            "rate_sigma_log2": sampling.rate_sigma_log2,
            "clip_sigmas": sampling.clip_sigmas,
        },
        "trials": [{"trial_index": t.trial_index, "seed": t.seed,
                    "audio": t.stimulus_path} for t in trials],
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    (out_dir / RESPONSES_NAME).touch()

    return Session(
        directory=out_dir, session_id=session_id, participant_id=participant_id,
        stimulus_id=stimulus.id, kind=stimulus.kind,
        option_labels=stimulus.option_labels,
        target_onset_s=stimulus.target_onset_s, option_order=option_order,
        n_trials=n_trials, master_seed=master_seed, sampling=sampling,
        trials=trials, responses=[],
    )


def load_session(directory) -> Session:
    """Rebuild a Session from its directory.

    Profiles are regenerated from the stored seeds rather than re-read.
    A truncated final line in the response log (crash mid-write) is
    skipped; corruption anywhere else is an error.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"{directory} is not a session directory "
                                f"(missing {MANIFEST_NAME})")
    doc = json.loads(manifest_path.read_text())

    sampling = SamplingSpec(
        num_windows=doc["sampling"]["num_windows"],
        window_duration_s=doc["sampling"]["window_duration_s"],
        pitch_sigma_cents=doc["sampling"]["pitch_sigma_cents"],
        rate_sigma_log2=doc["sampling"]["rate_sigma_log2"],
        clip_sigmas=doc["sampling"]["clip_sigmas"],
    )
    trials = []
    for entry in doc["trials"]:
        profile = sample_profile(sampling.with_seed(entry["seed"]))
        trials.append(TrialPlan(trial_index=entry["trial_index"],
                                seed=entry["seed"], profile=profile,
                                stimulus_path=entry["audio"]))

    responses = []
    log_path = directory / RESPONSES_NAME
    if log_path.exists():
        lines = log_path.read_bytes().decode("utf-8").split("\n")
        for lineno, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                if lineno == len(lines) - 1:
                    break  # partial trailing write from a crash
                raise ValueError(
                    f"{log_path}: corrupt response log at line {lineno + 1}")
            responses.append(ResponseRecord(
                trial_index=int(rec["trial_index"]), choice=rec["choice"],
                rt_ms=float(rec["rt_ms"]), timestamp=rec["timestamp"]))

    return Session(
        directory=directory,
        session_id=doc["session_id"],
        participant_id=doc["participant_id"],
        stimulus_id=doc["stimulus"]["id"],
        kind=doc["stimulus"]["kind"],
        option_labels=tuple(doc["stimulus"]["option_labels"]),
        target_onset_s=doc["stimulus"]["target_onset_s"],
        option_order=doc["option_order"],
        n_trials=doc["n_trials"],
        master_seed=doc["master_seed"],
        sampling=sampling,
        trials=trials,
        responses=responses,
    )


def record_response(session: Session, trial_index: int, choice: str,
                    rt_ms: float, timestamp: str | None = None) -> ResponseRecord:
    """Append one response to the session's log, durably.

    Responses must arrive in trial order (answered indices are always
    0..k-1 with no gaps); the stored choice is the canonical option
    label, independent of on-screen order.
    """
    if not 0 <= trial_index < session.n_trials:
        raise ValueError(
            f"trial_index out of range: {trial_index} not in [0, {session.n_trials})")
    if trial_index < session.answered:
        raise ValueError(f"trial {trial_index} already answered")
    if trial_index > session.answered:
        raise ValueError(
            f"trial {trial_index} answered out of order; next is {session.answered}")
    if choice not in session.option_labels:
        raise ValueError(
            f"choice {choice!r} is not one of {list(session.option_labels)}")

    record = ResponseRecord(trial_index=trial_index, choice=choice,
                            rt_ms=float(rt_ms),
                            timestamp=timestamp if timestamp else _utc_now())
    line = json.dumps(record.to_json_dict()) + "\n"
    with open(session.responses_path, "a", encoding="utf-8") as fh:
        fh.write(line)
        fh.flush()
        os.fsync(fh.fileno())
    session.responses.append(record)
    return record


def export_responses(session: Session, path=None) -> str:
    """Render the response table as CSV; optionally also write it to path.

    Rows are sorted by trial_index and formatting is stable, so
    re-exports of the same session are byte-identical.
    """
    lines = ["session_id,participant_id,stimulus_id,option_order,trial_index,"
             "choice,rt_ms,timestamp"]
    for r in sorted(session.responses, key=lambda r: r.trial_index):
        lines.append(",".join([
            session.session_id, session.participant_id, session.stimulus_id,
            session.option_order, str(r.trial_index), r.choice,
            repr(float(r.rt_ms)), r.timestamp,
        ]))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_stimulus_json(path) -> StimulusSet:
    """Load a stimulus description file.

    Expected keys: id, audio (WAV path, relative to the JSON file), kind,
    option_labels (pair), optional target_onset_s.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    missing = {"id", "audio", "kind", "option_labels"} - raw.keys()
    if missing:
        raise ValueError(f"{path}: stimulus file missing keys {sorted(missing)}")
    labels = raw["option_labels"]
    if not isinstance(labels, (list, tuple)) or len(labels) != 2:
        raise ValueError(f"{path}: option_labels must be a pair")
    audio_path = Path(raw["audio"])
    if not audio_path.is_absolute():
        audio_path = path.parent / audio_path
    return StimulusSet(id=str(raw["id"]), base_audio=read_wav(audio_path),
                       kind=str(raw["kind"]),
                       option_labels=(str(labels[0]), str(labels[1])),
                       target_onset_s=float(raw.get("target_onset_s", 0.0)))
