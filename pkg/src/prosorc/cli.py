"""Command-line front end: build, serve, export, simulate, analyze.

Each subcommand is a thin wrapper over the library; all real behavior
lives in (and is tested through) the modules it calls.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np


def _cmd_build(args) -> int:
    from prosorc.experiment import build_session, read_stimulus_json

    stimulus = read_stimulus_json(args.stimulus)
    session = build_session(stimulus, args.out_dir, n_trials=args.n_trials,
                            master_seed=args.seed,
                            participant_id=args.participant)
    print(f"built session {session.session_id}: {session.n_trials} trials, "
          f"option order {session.option_order}, at {session.directory}")
    return 0


def _cmd_serve(args) -> int:
    from prosorc.server import serve

    serve(args.dir, port=args.port, host=args.host, static_dir=args.static)
    return 0


def _cmd_export(args) -> int:
    from prosorc.experiment import export_responses, load_session

    session = load_session(args.dir)
    export_responses(session, args.out)
    print(f"wrote {session.answered} responses to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    from prosorc.experiment import load_session
    from prosorc.observers import read_observer_json, simulate_session

    observer = read_observer_json(args.observer)
    session = load_session(args.dir)
    records = simulate_session(observer, session, np.random.default_rng(args.seed))
    counts = {}
    for r in records:
        counts[r.choice] = counts.get(r.choice, 0) + 1
    summary = ", ".join(f"{label}: {n}" for label, n in sorted(counts.items()))
    print(f"answered {len(records)} trials ({summary}); session is {session.status}")
    return 0


def _read_response_csv(path):
    """Response CSV rows as (participant_id, trial_index, choice) tuples."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"participant_id", "trial_index", "choice"}
        if reader.fieldnames is None or needed - set(reader.fieldnames):
            raise ValueError(f"{path}: not a response CSV (need columns {sorted(needed)})")
        return [(row["participant_id"], int(row["trial_index"]), row["choice"])
                for row in reader]


def _cmd_analyze(args) -> int:
    from prosorc.analysis import compute_participant_kernels, export_results, group_stats
    from prosorc.profiles import read_profiles_csv

    if len(args.profiles) != len(args.responses):
        raise ValueError(
            f"got {len(args.profiles)} profile files but {len(args.responses)} "
            "response files; pass them in matching order")
    if args.group_by != "participant":
        raise ValueError(f"unsupported --group-by {args.group_by!r}")

    # participant -> ([pitch rows], [stretch rows], [choices]) pooled over files
    pooled = {}
    for prof_path, resp_path in zip(args.profiles, args.responses):
        indices, pitch, stretch = read_profiles_csv(prof_path)
        by_index = {int(idx): k for k, idx in enumerate(indices)}
        for participant, trial_index, choice in _read_response_csv(resp_path):
            if trial_index not in by_index:
                raise ValueError(
                    f"{resp_path}: trial {trial_index} has no profile in {prof_path}")
            k = by_index[trial_index]
            entry = pooled.setdefault(participant, ([], [], []))
            entry[0].append(pitch[k])
            entry[1].append(stretch[k])
            entry[2].append(choice)

    if not pooled:
        raise ValueError("no responses found in the given files")

    if args.options is not None:
        options = tuple(args.options)
    else:
        options = tuple(sorted({c for _, _, choices in pooled.values()
                                for c in choices}))
    if len(options) != 2:
        raise ValueError(
            f"expected exactly 2 distinct choice labels, got {options!r}; "
            "pass --options A B to name them")

    kernels = []
    for participant in sorted(pooled):
        p_rows, s_rows, choices = pooled[participant]
        kernels.extend(compute_participant_kernels(
            np.asarray(p_rows), np.asarray(s_rows), choices, participant,
            options=options))

    stats = group_stats(kernels, bonferroni=args.bonferroni)
    written = export_results(kernels, stats, args.out)
    n_participants = len(pooled)
    n_sig = sum(int(np.sum(s.significant)) for s in stats)
    n_seg = sum(len(s.significant) for s in stats)
    print(f"analyzed {n_participants} participants; "
          f"{n_sig}/{n_seg} segment tests significant")
    for p in written:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prosorc",
        description="Reverse-correlation prosody experiments: build sessions, "
                    "serve trials, simulate observers, analyze kernels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="render a session from a stimulus file")
    p.add_argument("--stimulus", required=True,
                   help="stimulus JSON (id, audio, kind, option_labels)")
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--n-trials", type=int, default=250)
    p.add_argument("--participant", default="anonymous")
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("serve", help="serve sessions over HTTP")
    p.add_argument("--dir", required=True, type=Path,
                   help="session directory, or a directory of sessions")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", type=Path, default=None,
                   help="static directory with the browser client")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("export", help="export a session's responses as CSV")
    p.add_argument("--dir", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(fn=_cmd_export)

    p = sub.add_parser("simulate", help="answer a session with a template observer")
    p.add_argument("--observer", required=True,
                   help="observer JSON (pitch_template, rate_template, noise_sd, bias)")
    p.add_argument("--dir", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("analyze", help="compute kernels and group statistics")
    p.add_argument("--profiles", required=True, nargs="+", type=Path,
                   help="profile CSVs, one per session")
    p.add_argument("--responses", required=True, nargs="+", type=Path,
                   help="response CSVs, matching --profiles order")
    p.add_argument("--group-by", default="participant",
                   help="grouping key (only 'participant' is supported)")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--options", nargs=2, metavar=("A", "B"), default=None,
                   help="canonical option labels (default: sorted choices)")
    p.add_argument("--bonferroni", action="store_true",
                   help="Bonferroni-correct the per-segment tests")
    p.set_defaults(fn=_cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
