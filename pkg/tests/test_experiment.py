import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from prosorc.audio import read_wav
from prosorc.experiment import (
    ResponseRecord,
    Session,
    StimulusSet,
    build_session,
    export_responses,
    load_session,
    record_response,
)
from prosorc.observers import LinearTemplateObserver, simulate_session
from prosorc.profiles import SamplingSpec, derive_trial_seed

from helpers import correlation, sawtooth

N_TRIALS = 8


def word_stimulus():
    return StimulusSet(id="wordtone", base_audio=sawtooth(150.0, 0.45, amplitude=0.4),
                       kind="word", option_labels=("peel", "pill"))


@pytest.fixture(scope="module")
def built_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sessions") / "s1"
    build_session(word_stimulus(), out, n_trials=N_TRIALS, master_seed=11,
                  participant_id="p01")
    return out


@pytest.fixture
def session(built_dir, tmp_path):
    work = tmp_path / "copy"
    shutil.copytree(built_dir, work)
    return load_session(work)


class TestStimulusSet:
    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown stimulus kind"):
            StimulusSet("x", sawtooth(150.0, 0.3), "sentence", ("a", "b"))

    def test_equal_labels_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            StimulusSet("x", sawtooth(150.0, 0.3), "word", ("a", "a"))

    def test_onset_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="target_onset_s"):
            StimulusSet("x", sawtooth(150.0, 0.3), "word", ("a", "b"),
                        target_onset_s=0.5)


class TestBuildSession:
    def test_layout_and_plan(self, built_dir):
        s = load_session(built_dir)
        assert s.n_trials == N_TRIALS
        assert s.option_order in ("AB", "BA")
        assert len(s.trials) == N_TRIALS
        assert len({t.seed for t in s.trials}) == N_TRIALS
        for i, t in enumerate(s.trials):
            assert t.trial_index == i
            assert t.seed == derive_trial_seed(11, i)
            assert t.profile.num_windows == 4
            assert s.trial_audio_path(i).exists()
        assert (built_dir / "profiles.csv").exists()
        assert (built_dir / "profiles" / "trial_0000.json").exists()
        assert (built_dir / "responses.jsonl").read_bytes() == b""

    def test_rendered_audio_is_valid(self, built_dir):
        s = load_session(built_dir)
        wav = read_wav(s.trial_audio_path(0))
        assert wav.sample_rate == 44100
        assert np.max(np.abs(wav.samples)) <= 1.0
        assert len(wav) > 1000

    def test_deterministic_rebuild(self, built_dir, tmp_path):
        out2 = tmp_path / "rebuild"
        build_session(word_stimulus(), out2, n_trials=N_TRIALS, master_seed=11,
                      participant_id="p01")
        assert ((built_dir / "manifest.json").read_bytes()
                == (out2 / "manifest.json").read_bytes())
        assert ((built_dir / "profiles.csv").read_bytes()
                == (out2 / "profiles.csv").read_bytes())
        assert ((built_dir / "audio/trial_0003.wav").read_bytes()
                == (out2 / "audio/trial_0003.wav").read_bytes())

    def test_near_zero_sigma_renders_identity(self, tmp_path):
        stim = word_stimulus()
        spec = SamplingSpec(num_windows=4, pitch_sigma_cents=1e-9,
                            rate_sigma_log2=1e-9)
        build_session(stim, tmp_path / "ident", n_trials=1, master_seed=0,
                      sampling=spec)
        rendered = read_wav(tmp_path / "ident" / "audio" / "trial_0000.wav")
        n = min(len(rendered), len(stim.base_audio))
        assert correlation(rendered.samples[:n], stim.base_audio.samples[:n]) >= 0.99

    def test_render_failure_names_trial(self, tmp_path):
        # rate values sampled far past the vocoder limit abort the build
        wild = SamplingSpec(num_windows=4, rate_sigma_log2=10.0)
        with pytest.raises(RuntimeError, match="render failed at trial 0"):
            build_session(word_stimulus(), tmp_path / "bad", n_trials=1,
                          sampling=wild)

    def test_zero_trials_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="n_trials"):
            build_session(word_stimulus(), tmp_path / "none", n_trials=0)

    def test_kind_spec_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="requires 4"):
            build_session(word_stimulus(), tmp_path / "mism",
                          sampling=SamplingSpec(num_windows=13))


class TestRecordResponse:
    def test_in_order_and_status(self, session):
        assert session.status == "created"
        for i in range(N_TRIALS):
            record_response(session, i, "peel" if i % 2 else "pill", rt_ms=300 + i)
            expected = "complete" if i == N_TRIALS - 1 else "running"
            assert session.status == expected
        assert session.answered == N_TRIALS

    def test_duplicate_rejected_and_log_unchanged(self, session):
        record_response(session, 0, "peel", rt_ms=250)
        before = session.responses_path.read_bytes()
        with pytest.raises(ValueError, match="already answered"):
            record_response(session, 0, "pill", rt_ms=100)
        assert session.responses_path.read_bytes() == before

    def test_out_of_order_rejected(self, session):
        with pytest.raises(ValueError, match="out of order"):
            record_response(session, 2, "peel", rt_ms=100)

    def test_out_of_range_rejected(self, session):
        with pytest.raises(ValueError, match="out of range"):
            record_response(session, N_TRIALS, "peel", rt_ms=100)
        with pytest.raises(ValueError, match="out of range"):
            record_response(session, -1, "peel", rt_ms=100)

    def test_unknown_choice_rejected(self, session):
        with pytest.raises(ValueError, match="not one of"):
            record_response(session, 0, "bell", rt_ms=100)

    def test_negative_rt_rejected(self, session):
        with pytest.raises(ValueError, match="rt_ms"):
            record_response(session, 0, "peel", rt_ms=-5)

    def test_persists_across_reload(self, session):
        record_response(session, 0, "peel", rt_ms=321.5, timestamp="2026-01-01T00:00:00.000Z")
        record_response(session, 1, "pill", rt_ms=298.0, timestamp="2026-01-01T00:00:01.000Z")
        back = load_session(session.directory)
        assert back.answered == 2
        assert back.responses[0] == ResponseRecord(0, "peel", 321.5,
                                                   "2026-01-01T00:00:00.000Z")


class TestCrashSafety:
    def test_kill9_mid_session_preserves_responses(self, session):
        script = (
            "import os, signal\n"
            "from prosorc.experiment import load_session, record_response\n"
            f"s = load_session({str(session.directory)!r})\n"
            "for i in range(5):\n"
            "    record_response(s, i, s.option_labels[i % 2], rt_ms=100 + i)\n"
            "os.kill(os.getpid(), signal.SIGKILL)\n"
        )
        proc = subprocess.run([sys.executable, "-c", script], capture_output=True)
        assert proc.returncode == -9
        back = load_session(session.directory)
        assert back.answered == 5
        assert [r.trial_index for r in back.responses] == [0, 1, 2, 3, 4]

    def test_partial_trailing_line_is_skipped(self, session):
        record_response(session, 0, "peel", rt_ms=100)
        with open(session.responses_path, "a") as fh:
            fh.write('{"trial_index": 1, "choice": "pi')  # torn write, no newline
        back = load_session(session.directory)
        assert back.answered == 1

    def test_corrupt_interior_line_raises(self, session):
        record_response(session, 0, "peel", rt_ms=100)
        with open(session.responses_path, "a") as fh:
            fh.write("not json\n")
            fh.write(json.dumps({"trial_index": 1, "choice": "pill",
                                 "rt_ms": 1, "timestamp": "t"}) + "\n")
        with pytest.raises(ValueError, match="corrupt response log"):
            load_session(session.directory)


class TestExportResponses:
    HEADER = ("session_id,participant_id,stimulus_id,option_order,"
              "trial_index,choice,rt_ms,timestamp")

    def test_empty_session_is_header_only(self, session):
        assert export_responses(session) == self.HEADER + "\n"

    def test_full_session_layout(self, session, tmp_path):
        for i in range(N_TRIALS):
            record_response(session, i, "peel", rt_ms=100.5 + i,
                            timestamp=f"2026-01-01T00:00:{i:02d}.000Z")
        out = tmp_path / "resp.csv"
        text = export_responses(session, out)
        lines = text.strip().split("\n")
        assert len(lines) == N_TRIALS + 1
        assert lines[0] == self.HEADER
        row = lines[1].split(",")
        assert row[0] == session.session_id
        assert row[1] == "p01"
        assert row[2] == "wordtone"
        assert row[3] == session.option_order
        assert row[4] == "0" and row[5] == "peel" and row[6] == "100.5"
        assert out.read_text() == text

    def test_re_export_is_byte_identical(self, session):
        for i in range(3):
            record_response(session, i, "pill", rt_ms=200)
        assert export_responses(session) == export_responses(session)

    def test_stored_choice_is_canonical_across_orders(self, tmp_path):
        # flipping presentation order never changes the exported label
        rows = {}
        for order in ("AB", "BA"):
            d = tmp_path / order
            d.mkdir()
            (d / "responses.jsonl").touch()
            s = Session(directory=d, session_id="s", participant_id="p",
                        stimulus_id="w", kind="word",
                        option_labels=("peel", "pill"), target_onset_s=0.0,
                        option_order=order, n_trials=2, master_seed=0,
                        sampling=SamplingSpec(num_windows=4), trials=[],
                        responses=[])
            assert s.presented_options == (("peel", "pill") if order == "AB"
                                           else ("pill", "peel"))
            record_response(s, 0, "peel", rt_ms=100, timestamp="t")
            rows[order] = export_responses(s).strip().split("\n")[1].split(",")
        assert rows["AB"][5] == rows["BA"][5] == "peel"


class TestSimulateSession:
    def test_answers_all_trials_and_persists(self, session):
        obs = LinearTemplateObserver(np.zeros(4), np.zeros(4), noise_sd=1.0)
        records = simulate_session(obs, session, np.random.default_rng(3))
        assert len(records) == N_TRIALS
        assert session.status == "complete"
        assert all(r.rt_ms == 0.0 for r in records)
        back = load_session(session.directory)
        assert [r.choice for r in back.responses] == [r.choice for r in records]

    def test_deterministic_choices(self, built_dir, tmp_path):
        obs = LinearTemplateObserver(np.array([1.0, 0, 0, 0]), np.zeros(4),
                                     noise_sd=50.0)
        choices = []
        for name in ("a", "b"):
            work = tmp_path / name
            shutil.copytree(built_dir, work)
            s = load_session(work)
            recs = simulate_session(obs, s, np.random.default_rng(77))
            choices.append([r.choice for r in recs])
        assert choices[0] == choices[1]

    def test_resumes_after_manual_answers(self, session):
        record_response(session, 0, "peel", rt_ms=100)
        obs = LinearTemplateObserver(np.zeros(4), np.zeros(4), noise_sd=1.0)
        records = simulate_session(obs, session, np.random.default_rng(5))
        assert len(records) == N_TRIALS - 1
        assert records[0].trial_index == 1
        assert session.status == "complete"

    def test_noiseless_template_matches_profile_signs(self, session):
        obs = LinearTemplateObserver(np.array([1.0, 0, 0, 0]), np.zeros(4))
        simulate_session(obs, session, np.random.default_rng(0))
        for trial, resp in zip(session.trials, session.responses):
            expected = ("peel" if trial.profile.pitch_cents[0] > 0 else "pill")
            assert resp.choice == expected
