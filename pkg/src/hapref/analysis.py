"""Before/after analytics: how much the pairwise stage moved the ratings.

'Before' is the 7-level pre-evaluation, 'after' the normalized strengths on
the same [-3, +3] scale. Per participant we report their Pearson
correlation and mean absolute difference; across participants, per-stimulus
mean and sample standard deviation.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

N_STIMULI = 15


@dataclass(frozen=True)
class ParticipantResult:
    participant_id: str
    before: np.ndarray  # ratings, aligned to stimulus ids
    after: np.ndarray  # normalized scores, same alignment
    r: float
    mad: float

    @classmethod
    def from_vectors(cls, participant_id: str, before, after) -> "ParticipantResult":
        before = np.asarray(before, dtype=float)
        after = np.asarray(after, dtype=float)
        return cls(participant_id=participant_id, before=before, after=after,
                   r=pearson_r(before, after),
                   mad=mean_absolute_difference(before, after))


def pearson_r(before, after) -> float:
    """Pearson product-moment correlation."""
    x = np.asarray(before, dtype=float)
    y = np.asarray(after, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"inputs must be 1-d and equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("correlation needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation is undefined for a constant vector")
    return float((dx * dy).sum() / (sx * sy))


def spearman_rho(before, after) -> float:
    """Rank-correlation alternative for robustness checks."""
    from scipy.stats import spearmanr

    rho = spearmanr(np.asarray(before, dtype=float), np.asarray(after, dtype=float)).statistic
    return float(rho)


def mean_absolute_difference(before, after) -> float:
    x = np.asarray(before, dtype=float)
    y = np.asarray(after, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise ValueError(f"inputs must be non-empty 1-d and equal length, got {x.shape} and {y.shape}")
    return float(np.abs(x - y).mean())


def aggregate_stats(results: list[ParticipantResult]) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-stimulus mean and sample standard deviation of the after-scores.

    The standard deviation is None with a single participant (n-1 denominator).
    """
    if not results:
        raise ValueError("no participant results to aggregate")
    after = np.stack([r.after for r in results])
    means = after.mean(axis=0)
    sds = after.std(axis=0, ddof=1) if len(results) > 1 else None
    return means, sds


def five_number_summary(values) -> dict[str, float]:
    """min / q1 / median / q3 / max, whiskers at the extremes."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty input")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(v.max())}


REPORT_FORMATS = ("csv", "png")


def report(results: list[ParticipantResult], out_dir: str,
           formats: tuple[str, ...] = ("csv",)) -> list[str]:
    """Write the tables (and optionally plots) behind the before/after analysis.

    CSV outputs: participants.csv (id, r, mad), before_after.csv (paired
    series), stimulus_stats.csv (per-stimulus mean and sd across
    participants), mad_summary.csv (per-participant five-number summary of
    the absolute differences). PNG outputs mirror them as static plots.
    Returns the list of files written.
    """
    if not results:
        raise ValueError("no participant results to report")
    for fmt in formats:
        if fmt not in REPORT_FORMATS:
            raise ValueError(f"unknown report format {fmt!r}; known: {REPORT_FORMATS}")
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    if "csv" in formats:
        path = os.path.join(out_dir, "participants.csv")
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["participant_id", "r", "mad"])
            for res in results:
                writer.writerow([res.participant_id, repr(res.r), repr(res.mad)])
        written.append(path)

        path = os.path.join(out_dir, "before_after.csv")
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["participant_id", "stimulus_id", "before", "after"])
            for res in results:
                for sid in range(len(res.before)):
                    writer.writerow([res.participant_id, sid,
                                     repr(float(res.before[sid])), repr(float(res.after[sid]))])
        written.append(path)

        means, sds = aggregate_stats(results)
        path = os.path.join(out_dir, "stimulus_stats.csv")
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["stimulus_id", "mean", "sd"])
            for sid in range(means.shape[0]):
                writer.writerow([sid, repr(float(means[sid])),
                                 "" if sds is None else repr(float(sds[sid]))])
        written.append(path)

        path = os.path.join(out_dir, "mad_summary.csv")
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["participant_id", "min", "q1", "median", "q3", "max"])
            for res in results:
                summary = five_number_summary(np.abs(res.before - res.after))
                writer.writerow([res.participant_id] +
                                [repr(summary[k]) for k in ("min", "q1", "median", "q3", "max")])
        written.append(path)

    if "png" in formats:
        written.extend(_plot_report(results, out_dir))
    return written


def _plot_report(results: list[ParticipantResult], out_dir: str) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    n = len(results)
    cols = min(n, 5)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 2.5 * rows), squeeze=False)
    for k, res in enumerate(results):
        ax = axes[k // cols][k % cols]
        x = np.arange(len(res.before))
        ax.plot(x, res.before, "r--", label="before")
        ax.plot(x, res.after, "b:", label="after")
        ax.set_title(f"{res.participant_id} (r={res.r:.2f})", fontsize=8)
        ax.set_ylim(-3.5, 3.5)
    for k in range(n, rows * cols):
        axes[k // cols][k % cols].axis("off")
    axes[0][0].legend(fontsize=6)
    fig.tight_layout()
    path = os.path.join(out_dir, "before_after.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(max(4, 0.6 * n), 3))
    diffs = [np.abs(r.before - r.after) for r in results]
    ax.boxplot(diffs, tick_labels=[r.participant_id for r in results], whis=(0, 100))
    ax.set_ylabel("|before - after|")
    fig.tight_layout()
    path = os.path.join(out_dir, "mad_box.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    means, sds = aggregate_stats(results)
    fig, ax = plt.subplots(figsize=(6, 3))
    x = np.arange(means.shape[0])
    ax.bar(x, means, yerr=None if sds is None else sds, capsize=3)
    ax.set_xlabel("stimulus id")
    ax.set_ylabel("mean pleasantness")
    fig.tight_layout()
    path = os.path.join(out_dir, "stimulus_means.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
