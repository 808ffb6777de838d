"""
Serving trials over HTTP to a scripted participant
==================================================

The live experiment runs over a small JSON API: the client asks for the
current trial, fetches its audio, and posts back a choice with the
reaction time.  The server hands out one trial at a time per session and
refuses duplicates and out-of-order posts, so a flaky connection or an
impatient double click cannot corrupt the data.

This script stands up the real server in a background thread and walks a
10-trial session through the same endpoints a browser would use.
"""

import json
import shutil
import threading
import urllib.request
from pathlib import Path

import numpy as np

from prosorc import StimulusSet, build_session, export_responses, load_session
from prosorc.audio import AudioBuffer
from prosorc.server import make_server

out_dir = Path(__file__).parent / "output" / "serve_and_client"
session_dir = out_dir / "session_live"
if session_dir.exists():
    shutil.rmtree(session_dir)

sr = 44100
t = np.arange(int(0.45 * sr)) / sr
word = AudioBuffer(0.4 * np.sign(np.sin(2 * np.pi * 150.0 * t)), sr)
stimulus = StimulusSet(id="demo-live", base_audio=word, kind="word",
                       option_labels=("peel", "pill"))
session = build_session(stimulus, session_dir, n_trials=10, master_seed=99,
                        participant_id="scripted-client")

server = make_server(session_dir)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"
sid = session.session_id
print(f"serving {sid} at {base}")


def get(path):
    with urllib.request.urlopen(base + path) as resp:
        return json.loads(resp.read())


def post(path, body):
    req = urllib.request.Request(base + path, data=json.dumps(body).encode(),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


# The client loop a browser runs: fetch trial, fetch audio, answer, repeat.
rng = np.random.default_rng(5)
while True:
    trial = get(f"/api/sessions/{sid}/trial")
    if trial.get("done"):
        print("server says: done")
        break
    with urllib.request.urlopen(base + trial["audio_url"]) as resp:
        wav_bytes = resp.read()
    choice = trial["options"][rng.integers(2)]
    post(f"/api/sessions/{sid}/response",
         {"trial_index": trial["trial_index"], "choice": choice,
          "rt_ms": float(rng.integers(250, 900))})
    print(f"  trial {trial['trial_index']}: fetched {len(wav_bytes)} wav bytes, "
          f"answered {choice!r}")

status = get(f"/api/sessions/{sid}/status")
print(f"final status: {status}")
server.shutdown()
server.server_close()

csv_path = out_dir / "responses_live.csv"
export_responses(load_session(session_dir), csv_path)
print(f"exported {csv_path}")
