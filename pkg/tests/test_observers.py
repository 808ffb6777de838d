import numpy as np
import pytest

from prosorc.analysis import compute_participant_kernels, cosine_similarity, group_stats, kernel_difference
from prosorc.observers import (
    LinearTemplateObserver,
    decide,
    decide_batch,
    decision_variable_sd,
    normalized_template,
    read_observer_json,
)
from prosorc.profiles import SamplingSpec, sample_profile


def make_profile(pitch, stretch):
    times = (np.arange(len(pitch)) + 0.5) * 0.1
    from prosorc.profiles import TransformProfile
    return TransformProfile(pitch_points=np.column_stack([times, pitch]),
                            stretch_points=np.column_stack([times, stretch]),
                            seed=0)


def draw_matrices(rng, n, k):
    pitch = np.clip(rng.normal(0, 100.0, (n, k)), -200, 200)
    stretch = np.clip(rng.normal(0, 0.5, (n, k)), -1, 1)
    return pitch, stretch


class TestObserverValidation:
    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dim mismatch"):
            LinearTemplateObserver(np.ones(4), np.ones(5))

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError, match="noise_sd"):
            LinearTemplateObserver(np.ones(4), np.ones(4), noise_sd=-1.0)

    def test_json_round_trip(self, tmp_path):
        obs = LinearTemplateObserver(np.array([1.0, 0.0, -0.5, 0.25]),
                                     np.array([0.0, 2.0, 0.0, 0.0]),
                                     noise_sd=1.5, bias=-0.3)
        path = tmp_path / "observer.json"
        import json
        path.write_text(json.dumps(obs.to_json_dict()))
        back = read_observer_json(path)
        np.testing.assert_array_equal(back.pitch_template, obs.pitch_template)
        np.testing.assert_array_equal(back.rate_template, obs.rate_template)
        assert back.noise_sd == obs.noise_sd and back.bias == obs.bias


class TestDecide:
    def test_zero_template_is_coin_flip(self):
        obs = LinearTemplateObserver(np.zeros(4), np.zeros(4), noise_sd=1.0)
        rng = np.random.default_rng(0)
        profile = make_profile(np.zeros(4), np.zeros(4))
        n = 10_000
        choices = [decide(obs, profile, rng) for _ in range(n)]
        prop_a = choices.count("A") / n
        assert abs(prop_a - 0.5) <= 0.025

    def test_noiseless_template_reads_first_segment_sign(self):
        obs = LinearTemplateObserver(np.array([1.0, 0, 0, 0]), np.zeros(4))
        rng = np.random.default_rng(1)
        for _ in range(200):
            pitch = np.clip(rng.normal(0, 100, 4), -200, 200)
            stretch = np.clip(rng.normal(0, 0.5, 4), -1, 1)
            choice = decide(obs, make_profile(pitch, stretch), rng)
            assert choice == ("A" if pitch[0] > 0 else "B")

    def test_large_bias_dominates(self):
        obs = LinearTemplateObserver(np.zeros(4), np.zeros(4), noise_sd=1.0,
                                     bias=10.0)
        rng = np.random.default_rng(2)
        profile = make_profile(np.zeros(4), np.zeros(4))
        choices = [decide(obs, profile, rng) for _ in range(2000)]
        assert choices.count("A") / 2000 > 0.99

    def test_profile_dim_mismatch_rejected(self):
        obs = LinearTemplateObserver(np.ones(13), np.ones(13))
        with pytest.raises(ValueError, match="dim mismatch"):
            decide(obs, make_profile(np.zeros(4), np.zeros(4)), np.random.default_rng(0))

    def test_scale_invariance_matched_seeds(self):
        base = LinearTemplateObserver(np.array([1.0, -0.5, 0, 0.25]),
                                      np.array([0.5, 0, 0, -1.0]),
                                      noise_sd=50.0, bias=5.0)
        c = 3.0
        scaled = LinearTemplateObserver(c * base.pitch_template,
                                        c * base.rate_template,
                                        noise_sd=c * base.noise_sd,
                                        bias=c * base.bias)
        rng_a, rng_b = np.random.default_rng(7), np.random.default_rng(7)
        sampler = np.random.default_rng(8)
        for _ in range(500):
            pitch = np.clip(sampler.normal(0, 100, 4), -200, 200)
            stretch = np.clip(sampler.normal(0, 0.5, 4), -1, 1)
            profile = make_profile(pitch, stretch)
            assert decide(base, profile, rng_a) == decide(scaled, profile, rng_b)


class TestDecideBatch:
    def test_matches_sequential_decide(self):
        obs = LinearTemplateObserver(np.array([0.8, 0, -0.3, 0]),
                                     np.array([0, 0.4, 0, 0]), noise_sd=40.0)
        pitch, stretch = draw_matrices(np.random.default_rng(3), 300, 4)
        batch = decide_batch(obs, pitch, stretch, np.random.default_rng(55))
        rng = np.random.default_rng(55)
        single = [decide(obs, make_profile(pitch[i], stretch[i]), rng)
                  for i in range(300)]
        assert list(batch) == single

    def test_unbiased_proportion(self):
        obs = LinearTemplateObserver(np.zeros(4), np.zeros(4), noise_sd=1.0)
        pitch, stretch = draw_matrices(np.random.default_rng(4), 2000, 4)
        choices = decide_batch(obs, pitch, stretch, np.random.default_rng(5))
        prop = np.mean(choices == "A")
        assert abs(prop - 0.5) <= 0.025


class TestDecisionVariableSd:
    def test_matches_analytic_single_weight(self):
        # d = 1 * pitch_0: sd equals the saturated gaussian sd (~95.9 cents)
        obs = LinearTemplateObserver(np.array([1.0, 0, 0, 0]), np.zeros(4))
        sd = decision_variable_sd(obs)
        assert 94.0 <= sd <= 98.0

    def test_scales_with_template(self):
        obs1 = LinearTemplateObserver(np.array([1.0, 0, 0, 0]), np.zeros(4))
        obs2 = LinearTemplateObserver(np.array([2.0, 0, 0, 0]), np.zeros(4))
        assert decision_variable_sd(obs2) == pytest.approx(
            2 * decision_variable_sd(obs1), rel=1e-9)


def recovered_similarity(observer, n_trials, seed, n_participants=1):
    """Cosine between analysis kernels and the generating template."""
    rng = np.random.default_rng(seed)
    kernels = []
    for i in range(n_participants):
        pitch, stretch = draw_matrices(rng, n_trials, observer.num_segments)
        choices = decide_batch(observer, pitch, stretch, rng)
        kernels += compute_participant_kernels(pitch, stretch, choices, f"p{i:02d}")
    if n_participants > 1:
        diff = kernel_difference(group_stats(kernels))
    else:
        by = {(k.domain, k.option): k.values for k in kernels}
        diff = np.concatenate([by[("pitch", "A")] - by[("pitch", "B")],
                               by[("rate", "A")] - by[("rate", "B")]])
    return cosine_similarity(diff, normalized_template(observer))


def balanced_observer(pitch_pattern, rate_pattern, noise_multiple=1.0):
    """Observer whose domains contribute equally to the decision variable.

    Raw units differ hugely (cents vs log2 factors), so the rate weights
    are scaled by sigma_pitch/sigma_rate = 200 to give both domains
    comparable influence, like a listener weighing both cues near their
    discrimination thresholds.
    """
    tp = np.asarray(pitch_pattern, dtype=np.float64)
    tr = 200.0 * np.asarray(rate_pattern, dtype=np.float64)
    silent = LinearTemplateObserver(tp, tr)
    return LinearTemplateObserver(
        tp, tr, noise_sd=noise_multiple * decision_variable_sd(silent))


class TestKernelRecovery:
    def test_similarity_positive_and_monotone_in_trials(self):
        obs = balanced_observer([1.0, 0.5, 0.0, -0.5], [-0.4, 0.0, 0.8, 0.2])
        means = []
        for n_trials in (250, 1000, 4000):
            sims = [recovered_similarity(obs, n_trials, seed) for seed in range(20)]
            assert all(s > 0 for s in sims)
            means.append(np.mean(sims))
        assert means[0] < means[1] < means[2]

    def test_unbalanced_template_still_recovers_positively(self):
        # pitch-dominated observer: rate block converges slowly, but the
        # similarity must stay positive at every seed
        obs = LinearTemplateObserver(np.array([1.0, 0.5, 0.0, -0.5]),
                                     np.array([-0.4, 0.0, 0.8, 0.2]))
        obs = LinearTemplateObserver(obs.pitch_template, obs.rate_template,
                                     noise_sd=decision_variable_sd(obs))
        sims = [recovered_similarity(obs, 1000, seed) for seed in range(20)]
        assert all(s > 0 for s in sims)
