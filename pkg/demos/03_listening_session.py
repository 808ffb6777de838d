"""
Building a listening session and answering it with a simulated observer
=======================================================================

A session is a plain directory: an immutable manifest with the per-trial
seeds, the pre-rendered stimulus audio, and an append-only response log.
Here we build a short word session, let a template observer answer it,
and show that the whole thing survives a reload from disk.
"""

from pathlib import Path

import numpy as np

from prosorc import (
    LinearTemplateObserver,
    StimulusSet,
    bias,
    build_session,
    export_responses,
    load_session,
    simulate_session,
)
from prosorc.audio import AudioBuffer

out_dir = Path(__file__).parent / "output" / "listening_session"
session_dir = out_dir / "session_demo"

# The base "word": a 450 ms pulse train standing in for a flattened
# recording of one target word.
sr = 44100
t = np.arange(int(0.45 * sr)) / sr
word = AudioBuffer(0.4 * np.sign(np.sin(2 * np.pi * 150.0 * t)), sr)
stimulus = StimulusSet(id="demo-word", base_audio=word, kind="word",
                       option_labels=("peel", "pill"))

if session_dir.exists():
    import shutil

    shutil.rmtree(session_dir)
session = build_session(stimulus, session_dir, n_trials=40, master_seed=404,
                        participant_id="sim-listener")
print(f"built {session.session_id}: {session.n_trials} trials, "
      f"options shown in order {session.presented_options}")
print(f"  on disk: manifest.json, profiles.csv, "
      f"{len(list((session_dir / 'audio').glob('*.wav')))} wav files")

# A linear-template observer prefers option A when the early pitch of a
# trial is raised: its decision variable is the dot product of the trial
# profile with its templates plus Gaussian noise.
observer = LinearTemplateObserver(pitch_template=np.array([1.0, 0.5, 0.0, 0.0]),
                                  rate_template=np.zeros(4),
                                  noise_sd=120.0)
records = simulate_session(observer, session, np.random.default_rng(1))
report = bias([r.choice for r in records])
print(f"observer answered {len(records)} trials: {report.counts} "
      f"(proportions {dict((k, round(v, 2)) for k, v in report.proportions.items())})")

# Responses are flushed to the log as they arrive, so reloading the
# directory recovers the identical session state.
reloaded = load_session(session_dir)
assert reloaded.status == "complete"
assert [r.choice for r in reloaded.responses] == [r.choice for r in records]
print(f"reloaded from disk: status {reloaded.status}, "
      f"{reloaded.answered}/{reloaded.n_trials} answered")

csv_path = out_dir / "responses.csv"
export_responses(reloaded, csv_path)
print(f"exported response table to {csv_path}")
print(csv_path.read_text().splitlines()[0])
print(csv_path.read_text().splitlines()[1])
