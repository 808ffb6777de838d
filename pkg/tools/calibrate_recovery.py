"""Brute-force simulation oracle that freezes kernel-recovery thresholds.

Self-contained on purpose: everything (stimulus sampling, observer
decisions, kernel means, normalization, cosine) is re-implemented inline
with plain numpy so the frozen thresholds come from a code path that is
independent of the package the acceptance tests exercise.

Run from the repository root:

    python3 tools/calibrate_recovery.py

Writes tools/recovery_thresholds.json with the full replicate statistics
and the frozen thresholds.  The low-trial threshold is the replicate
minimum minus five standard deviations, rounded down, so a correct
implementation passes for any seed while a directional or scaling bug
(which costs tens of points of similarity) still fails.
"""

import json
import math
from pathlib import Path

import numpy as np

PITCH_SIGMA = 100.0     # cents
RATE_SIGMA = 0.5        # log2 duration factor
CLIP_SIGMAS = 2.0
SEGMENTS = 4            # word task

# Acceptance observer: both domains matter equally for the decision, so
# the rate weights carry the sigma ratio (0.5 log2 vs 100 cents = x200).
PITCH_TEMPLATE = np.array([1.0, 0.5, 0.0, -0.5])
RATE_TEMPLATE = 200.0 * np.array([-0.4, 0.0, 0.8, 0.2])

PARTICIPANTS = 25
TRIALS_LOW = 250
TRIALS_HIGH = 2000
REPLICATES = 200


def draw_profiles(rng, n_trials):
    pitch = np.clip(rng.normal(0.0, PITCH_SIGMA, (n_trials, SEGMENTS)),
                    -CLIP_SIGMAS * PITCH_SIGMA, CLIP_SIGMAS * PITCH_SIGMA)
    stretch = np.clip(rng.normal(0.0, RATE_SIGMA, (n_trials, SEGMENTS)),
                      -CLIP_SIGMAS * RATE_SIGMA, CLIP_SIGMAS * RATE_SIGMA)
    return pitch, stretch


def matched_noise_sd(rng):
    pitch, stretch = draw_profiles(rng, 500_000)
    d = pitch @ PITCH_TEMPLATE + stretch @ RATE_TEMPLATE
    return float(np.std(d))


def one_experiment(rng, n_trials, noise_sd):
    """One 25-participant experiment -> cosine(group diff, template)."""
    diffs = []
    for _ in range(PARTICIPANTS):
        pitch, stretch = draw_profiles(rng, n_trials)
        d = (pitch @ PITCH_TEMPLATE + stretch @ RATE_TEMPLATE
             + rng.normal(0.0, noise_sd, n_trials))
        chose_a = d > 0
        if not chose_a.any() or chose_a.all():
            raise RuntimeError("degenerate replicate: one option never chosen")
        parts = []
        for mat in (pitch, stretch):
            mean_a = mat[chose_a].mean(axis=0)
            mean_b = mat[~chose_a].mean(axis=0)
            rms = math.sqrt(float(np.mean(np.concatenate([mean_a, mean_b]) ** 2)))
            parts.append((mean_a - mean_b) / rms)
        diffs.append(np.concatenate(parts))
    group = np.mean(diffs, axis=0)

    template = np.concatenate([PITCH_TEMPLATE / np.linalg.norm(PITCH_TEMPLATE),
                               RATE_TEMPLATE / np.linalg.norm(RATE_TEMPLATE)])
    return float(group @ template / (np.linalg.norm(group) * np.linalg.norm(template)))


def replicate_stats(n_trials, noise_sd, seed0):
    sims = np.array([one_experiment(np.random.default_rng(seed0 + i), n_trials, noise_sd)
                     for i in range(REPLICATES)])
    return {
        "mean": float(sims.mean()),
        "sd": float(sims.std(ddof=1)),
        "min": float(sims.min()),
        "max": float(sims.max()),
        "q01": float(np.quantile(sims, 0.01)),
    }


def floor_to(x, decimals):
    scale = 10 ** decimals
    return math.floor(x * scale) / scale


def main():
    noise_sd = matched_noise_sd(np.random.default_rng(20260814))
    print(f"matched decision noise sd: {noise_sd:.3f}")

    low = replicate_stats(TRIALS_LOW, noise_sd, seed0=1000)
    high = replicate_stats(TRIALS_HIGH, noise_sd, seed0=5000)
    print(f"{TRIALS_LOW} trials/participant: {low}")
    print(f"{TRIALS_HIGH} trials/participant: {high}")

    threshold_low = floor_to(low["min"] - 5.0 * low["sd"], 2)
    doc = {
        "description": "kernel-recovery thresholds frozen from the brute-force "
                       "simulation oracle in this directory",
        "observer": {
            "pitch_template": PITCH_TEMPLATE.tolist(),
            "rate_template": RATE_TEMPLATE.tolist(),
            "noise_sd": noise_sd,
            "bias": 0.0,
        },
        "stimulus": {"pitch_sigma_cents": PITCH_SIGMA, "rate_sigma_log2": RATE_SIGMA,
                     "clip_sigmas": CLIP_SIGMAS, "segments": SEGMENTS},
        "participants": PARTICIPANTS,
        "replicates": REPLICATES,
        "trials_low": TRIALS_LOW,
        "trials_high": TRIALS_HIGH,
        "similarity_low": low,
        "similarity_high": high,
        "threshold_low": threshold_low,
        "threshold_high": 0.9,
    }
    out = Path(__file__).parent / "recovery_thresholds.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"threshold_low = {threshold_low}, threshold_high = 0.9 -> {out}")


if __name__ == "__main__":
    main()
