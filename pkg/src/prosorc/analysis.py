"""Classification-image kernels, group statistics, and result export.

A kernel is the per-segment mean of the random transformation values
over the trials classified as one response option.  Per participant and
domain the two option means are normalized by one shared RMS scalar,
which preserves the A-vs-B contrast that the per-segment paired t-tests
operate on.  Group statistics aggregate normalized kernels across
participants with Student-t confidence intervals.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import betainc
from scipy.stats import t as student_t

DOMAINS = ("pitch", "rate")
DEFAULT_ALPHA = 0.05


def default_segment_times(num_segments: int, window_duration_s: float = 0.1) -> np.ndarray:
    """Nominal segment start times on the base recording's timeline."""
    return np.arange(num_segments) * window_duration_s


@dataclass(frozen=True)
class Kernel:
    """One participant's mean perturbation profile for one response option.

    values are per-segment means (cents for the pitch domain, log2
    duration factors for the rate domain), possibly normalized.
    """

    domain: str
    option: str
    values: np.ndarray
    participant_id: str

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}, expected one of {DOMAINS}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("kernel values must be a non-empty 1-D array")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class OptionMeans:
    """Per-domain mean transformation profiles conditioned on the choice."""

    pitch_A: np.ndarray
    pitch_B: np.ndarray
    rate_A: np.ndarray
    rate_B: np.ndarray
    options: tuple[str, str]
    n_A: int
    n_B: int


@dataclass(frozen=True)
class GroupStats:
    """Cross-participant statistics for one domain, per segment.

    ci_A / ci_B are 95% CI half-widths around the means; t/p/significant
    come from the per-segment paired test between option-A and option-B
    kernel values across participants.  degenerate marks segments where
    every participant had the same nonzero difference (t is +/-inf,
    p = 0 by convention).
    """

    domain: str
    options: tuple[str, str]
    segment_times: np.ndarray
    mean_A: np.ndarray
    mean_B: np.ndarray
    ci_A: np.ndarray
    ci_B: np.ndarray
    t: np.ndarray
    df: int
    p: np.ndarray
    significant: np.ndarray
    degenerate: np.ndarray
    n_participants: int


@dataclass(frozen=True)
class BiasReport:
    """Response counts and proportions per option."""

    counts: dict[str, int]
    proportions: dict[str, float]
    n_trials: int


def per_option_means(pitch: np.ndarray, stretch: np.ndarray, choices,
                     options: tuple[str, str] = ("A", "B")) -> OptionMeans:
    """Mean pitch and stretch profiles conditioned on the response.

    pitch and stretch are (n_trials, n_segments) matrices aligned row
    by row with choices.  Raises if either option received no responses.
    """
    pitch = np.asarray(pitch, dtype=np.float64)
    stretch = np.asarray(stretch, dtype=np.float64)
    choices = np.asarray(list(choices))
    if pitch.ndim != 2 or stretch.ndim != 2:
        raise ValueError("profile matrices must be 2-D (n_trials, n_segments)")
    if not (pitch.shape[0] == stretch.shape[0] == choices.shape[0]):
        raise ValueError(
            f"row mismatch: {pitch.shape[0]} pitch rows, {stretch.shape[0]} "
            f"stretch rows, {choices.shape[0]} choices")

    opt_a, opt_b = options
    mask_a = choices == opt_a
    mask_b = choices == opt_b
    for opt, mask in ((opt_a, mask_a), (opt_b, mask_b)):
        if not np.any(mask):
            raise ValueError(f"degenerate response set: no responses for option {opt!r}")
    return OptionMeans(
        pitch_A=pitch[mask_a].mean(axis=0),
        pitch_B=pitch[mask_b].mean(axis=0),
        rate_A=stretch[mask_a].mean(axis=0),
        rate_B=stretch[mask_b].mean(axis=0),
        options=(opt_a, opt_b),
        n_A=int(np.count_nonzero(mask_a)),
        n_B=int(np.count_nonzero(mask_b)),
    )


def normalize_kernel_pair(mean_A: np.ndarray, mean_B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divide both option means by their shared RMS.

    The scalar is the RMS over the concatenation of the two vectors, so
    the concatenated normalized pair has RMS exactly 1 and the contrast
    between options is preserved.
    """
    mean_A = np.asarray(mean_A, dtype=np.float64)
    mean_B = np.asarray(mean_B, dtype=np.float64)
    both = np.concatenate([mean_A, mean_B])
    rms = float(np.sqrt(np.mean(both ** 2)))
    if rms == 0.0:
        raise ValueError("zero kernel: both option means are identically zero")
    return mean_A / rms, mean_B / rms


def compute_participant_kernels(pitch: np.ndarray, stretch: np.ndarray, choices,
                                participant_id: str,
                                options: tuple[str, str] = ("A", "B"),
                                normalize: bool = True) -> list[Kernel]:
    """Build the four kernels (pitch/rate x option) for one participant."""
    means = per_option_means(pitch, stretch, choices, options)
    pairs = {"pitch": (means.pitch_A, means.pitch_B),
             "rate": (means.rate_A, means.rate_B)}
    kernels = []
    for domain in DOMAINS:
        a, b = pairs[domain]
        if normalize:
            a, b = normalize_kernel_pair(a, b)
        kernels.append(Kernel(domain=domain, option=options[0], values=a,
                              participant_id=participant_id))
        kernels.append(Kernel(domain=domain, option=options[1], values=b,
                              participant_id=participant_id))
    return kernels


def paired_t(a, b) -> tuple[float, int, float]:
    """Two-sided paired t-test: t statistic, df = n - 1, p value.

    The p value comes from the Student t CDF evaluated through the
    regularized incomplete beta function.  Zero-variance conventions:
    identical pairs give (0, df, 1); identical nonzero differences give
    (+/-inf, df, 0) with a "degenerate variance" warning.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean_d = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean_d == 0.0:
            return 0.0, df, 1.0
        warnings.warn("degenerate variance: all paired differences are identical",
                      RuntimeWarning, stacklevel=2)
        return math.copysign(math.inf, mean_d), df, 0.0
    t = mean_d / (sd / math.sqrt(n))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, df, p


def group_stats(kernels, segment_times=None, alpha: float = DEFAULT_ALPHA,
                bonferroni: bool = False) -> list[GroupStats]:
    """Aggregate normalized kernels across participants, per domain.

    Every participant must contribute both options for each domain
    present.  Returns one GroupStats per domain in DOMAINS order.  With
    bonferroni=True the significance threshold is alpha divided by the
    segment count; p values themselves are never adjusted.
    """
    kernels = list(kernels)
    if not kernels:
        raise ValueError("no kernels given")

    by_domain: dict[str, dict[str, dict[str, np.ndarray]]] = {}
    option_order: dict[str, list[str]] = {}
    for k in kernels:
        per_part = by_domain.setdefault(k.domain, {})
        per_part.setdefault(k.participant_id, {})[k.option] = k.values
        order = option_order.setdefault(k.domain, [])
        if k.option not in order:
            order.append(k.option)

    out = []
    for domain in DOMAINS:
        if domain not in by_domain:
            continue
        options = option_order[domain]
        if len(options) != 2:
            raise ValueError(
                f"domain {domain!r} needs exactly 2 options, got {options}")
        per_part = by_domain[domain]
        n = len(per_part)
        if n < 2:
            raise ValueError(f"need >= 2 participants, got {n} for domain {domain!r}")
        participants = sorted(per_part)
        dims = set()
        for pid in participants:
            if set(per_part[pid]) != set(options):
                raise ValueError(
                    f"participant {pid!r} is missing an option kernel for {domain!r}")
            dims.update(v.size for v in per_part[pid].values())
        if len(dims) != 1:
            raise ValueError(f"inconsistent kernel dims {sorted(dims)} for {domain!r}")
        n_seg = dims.pop()

        mat_a = np.array([per_part[pid][options[0]] for pid in participants])
        mat_b = np.array([per_part[pid][options[1]] for pid in participants])

        df = n - 1
        crit = float(student_t.ppf(1.0 - alpha / 2.0, df))
        sem_a = mat_a.std(axis=0, ddof=1) / math.sqrt(n)
        sem_b = mat_b.std(axis=0, ddof=1) / math.sqrt(n)

        t_vals = np.empty(n_seg)
        p_vals = np.empty(n_seg)
        for s in range(n_seg):
            t_vals[s], _, p_vals[s] = paired_t(mat_a[:, s], mat_b[:, s])

        threshold = alpha / n_seg if bonferroni else alpha
        times = (default_segment_times(n_seg) if segment_times is None
                 else np.asarray(segment_times, dtype=np.float64))
        if times.size != n_seg:
            raise ValueError(f"segment_times has {times.size} entries, expected {n_seg}")
        out.append(GroupStats(
            domain=domain,
            options=(options[0], options[1]),
            segment_times=times,
            mean_A=mat_a.mean(axis=0),
            mean_B=mat_b.mean(axis=0),
            ci_A=crit * sem_a,
            ci_B=crit * sem_b,
            t=t_vals,
            df=df,
            p=p_vals,
            significant=p_vals < threshold,
            degenerate=np.isinf(t_vals),
            n_participants=n,
        ))
    return out


def bias(choices, options=None) -> BiasReport:
    """Count responses per option and report proportions."""
    choices = list(choices)
    if not choices:
        raise ValueError("no responses to analyze")
    if options is None:
        options = sorted(set(choices))
    counts = {opt: 0 for opt in options}
    for c in choices:
        if c not in counts:
            raise ValueError(f"choice {c!r} is not among options {list(options)}")
        counts[c] += 1
    n = len(choices)
    proportions = {opt: counts[opt] / n for opt in options}
    return BiasReport(counts=counts, proportions=proportions, n_trials=n)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors; raises on a zero vector."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


def kernel_difference(stats: list[GroupStats]) -> np.ndarray:
    """Concatenated group mean_A - mean_B over domains in DOMAINS order."""
    by_domain = {s.domain: s for s in stats}
    parts = [by_domain[d].mean_A - by_domain[d].mean_B
             for d in DOMAINS if d in by_domain]
    if not parts:
        raise ValueError("no stats given")
    return np.concatenate(parts)


def write_stats_csv(stats: list[GroupStats], path) -> None:
    """Write per-segment group statistics as a flat CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_time_s", "domain", "mean_A", "mean_B",
                         "ci_A", "ci_B", "t", "df", "p", "significant"])
        for st in stats:
            for s in range(st.segment_times.size):
                writer.writerow([
                    repr(float(st.segment_times[s])), st.domain,
                    repr(float(st.mean_A[s])), repr(float(st.mean_B[s])),
                    repr(float(st.ci_A[s])), repr(float(st.ci_B[s])),
                    repr(float(st.t[s])), st.df, repr(float(st.p[s])),
                    "true" if st.significant[s] else "false",
                ])


def _plot_stats(stats: list[GroupStats], kernels, path) -> None:
    import matplotlib
    import matplotlib.pyplot as plt

    units = {"pitch": "pitch kernel (normalized cents)",
             "rate": "rate kernel (normalized log2 duration)"}
    with matplotlib.rc_context({"svg.hashsalt": "prosorc-kernels"}):
        fig, axes = plt.subplots(1, len(stats), figsize=(5.2 * len(stats), 3.6),
                                 squeeze=False)
        for ax, st in zip(axes[0], stats):
            x = st.segment_times
            ax.axhline(0.0, color="0.8", lw=0.8, zorder=0)
            ax.plot(x, st.mean_A, "o-", color="#c44e52", label=st.options[0])
            ax.fill_between(x, st.mean_A - st.ci_A, st.mean_A + st.ci_A,
                            color="#c44e52", alpha=0.25, lw=0)
            ax.plot(x, st.mean_B, "s-", color="#4c72b0", label=st.options[1])
            ax.fill_between(x, st.mean_B - st.ci_B, st.mean_B + st.ci_B,
                            color="#4c72b0", alpha=0.25, lw=0)
            if np.any(st.significant):
                top = max(np.max(st.mean_A + st.ci_A), np.max(st.mean_B + st.ci_B))
                ax.plot(x[st.significant],
                        np.full(int(np.count_nonzero(st.significant)), top * 1.12 + 0.05),
                        "k*", ms=9, label="p < 0.05")
            ax.set_xlabel("segment time (s)")
            ax.set_ylabel(units.get(st.domain, st.domain))
            ax.set_title(f"{st.domain} (n = {st.n_participants})")
            ax.legend(frameon=False, fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def export_results(kernels, stats: list[GroupStats], out_dir) -> list[Path]:
    """Write the stats CSV and a kernel figure (SVG) into out_dir.

    Output bytes are deterministic for fixed input: the SVG is written
    with a fixed hash salt and no timestamp metadata.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "stats.csv"
    svg_path = out_dir / "kernels.svg"
    write_stats_csv(stats, csv_path)
    _plot_stats(stats, kernels, svg_path)
    return [csv_path, svg_path]
