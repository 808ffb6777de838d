"""prosorc: reverse-correlation toolkit for speech prosody perception.

The package renders randomly pitch/rate-manipulated speech stimuli with a
phase vocoder, runs 1-interval 2AFC listening sessions (live over HTTP or
with simulated observers), and reconstructs the per-segment pitch and
speech-rate kernels that drive a listener's judgement.
"""

from prosorc.analysis import (
    BiasReport,
    GroupStats,
    Kernel,
    bias,
    compute_participant_kernels,
    cosine_similarity,
    export_results,
    group_stats,
    kernel_difference,
    normalize_kernel_pair,
    paired_t,
    per_option_means,
)
from prosorc.audio import AudioBuffer, read_wav, write_wav
from prosorc.experiment import (
    ResponseRecord,
    Session,
    StimulusSet,
    TrialPlan,
    build_session,
    export_responses,
    load_session,
    record_response,
)
from prosorc.observers import (
    LinearTemplateObserver,
    decide,
    decision_variable_sd,
    normalized_template,
    simulate_session,
)
from prosorc.pitch import F0Track, estimate_f0, flatten_pitch
from prosorc.profiles import (
    SamplingSpec,
    TransformProfile,
    derive_trial_seed,
    sample_profile,
    segment_count_for,
)
from prosorc.splicing import insert_target
from prosorc.vocoder import (
    StftConfig,
    istft,
    pitch_shift,
    render_profile,
    stft,
    time_stretch,
)

__all__ = [
    "AudioBuffer",
    "read_wav",
    "write_wav",
    "SamplingSpec",
    "TransformProfile",
    "derive_trial_seed",
    "sample_profile",
    "segment_count_for",
    "StftConfig",
    "stft",
    "istft",
    "time_stretch",
    "pitch_shift",
    "render_profile",
    "F0Track",
    "estimate_f0",
    "flatten_pitch",
    "insert_target",
    "StimulusSet",
    "TrialPlan",
    "Session",
    "ResponseRecord",
    "build_session",
    "load_session",
    "record_response",
    "export_responses",
    "LinearTemplateObserver",
    "decide",
    "simulate_session",
    "normalized_template",
    "decision_variable_sd",
    "Kernel",
    "GroupStats",
    "BiasReport",
    "per_option_means",
    "normalize_kernel_pair",
    "compute_participant_kernels",
    "paired_t",
    "group_stats",
    "bias",
    "cosine_similarity",
    "kernel_difference",
    "export_results",
]

__version__ = "0.1.0"
