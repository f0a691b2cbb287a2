"""Navigation metrics (SR / SPL / DTG), length groups, completion-progress
curves, critical-decision-bifurcation detection and dataset statistics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .episode import EpisodeLog
from .world import Action, action_category

PAPER_GROUP_BOUNDS = (118.2, 223.6)
GROUP_NAMES = ("short", "middle", "long")


class EmptySet(Exception):
    """Metric requested over zero episodes."""


class DegenerateStart(Exception):
    """Progress curve undefined: the agent starts inside the success radius."""


def success_rate(logs: list[EpisodeLog]) -> float:
    if not logs:
        raise EmptySet("success_rate needs at least one episode")
    return float(np.mean([1.0 if log.succeeded() else 0.0 for log in logs]))


def spl(logs: list[EpisodeLog], optimal_lengths: list[float]) -> float:
    """Mean of s_i * l_i / max(l_i, g_i) with g_i the traveled length."""
    if not logs:
        raise EmptySet("spl needs at least one episode")
    if len(logs) != len(optimal_lengths):
        raise ValueError("one optimal length per episode required")
    terms = []
    for log, l in zip(logs, optimal_lengths):
        if l <= 0:
            raise ValueError("optimal lengths must be positive")
        if not log.succeeded():
            terms.append(0.0)
            continue
        g = log.traveled_length()
        terms.append(l / max(l, g))
    return float(np.mean(terms))


def dtg(logs: list[EpisodeLog]) -> float:
    if not logs:
        raise EmptySet("dtg needs at least one episode")
    return float(np.mean([log.final_distance for log in logs]))


def group_episodes(logs: list[EpisodeLog], gt_lengths: list[float],
                   mode: str = "trisect") -> dict[str, list[int]]:
    """Partition episode indices into short/middle/long by ground-truth length.

    trisect mode draws boundaries at the 1/3 and 2/3 quantiles; paper_fixed uses
    the published 118.2 m / 223.6 m boundaries (short is strictly less).
    """
    if mode not in ("trisect", "paper_fixed"):
        raise ValueError("mode must be 'trisect' or 'paper_fixed'")
    if len(logs) != len(gt_lengths):
        raise ValueError("one ground-truth length per episode required")
    groups: dict[str, list[int]] = {name: [] for name in GROUP_NAMES}
    if not logs:
        return groups
    if mode == "paper_fixed":
        b1, b2 = PAPER_GROUP_BOUNDS
    else:
        b1, b2 = np.quantile(gt_lengths, [1.0 / 3.0, 2.0 / 3.0]).tolist()
    for i, length in enumerate(gt_lengths):
        if length < b1:
            groups["short"].append(i)
        elif length <= b2:
            groups["middle"].append(i)
        else:
            groups["long"].append(i)
    return groups


def group_boundaries(gt_lengths: list[float], mode: str = "trisect") -> tuple[float, float]:
    if mode == "paper_fixed":
        return PAPER_GROUP_BOUNDS
    q = np.quantile(gt_lengths, [1.0 / 3.0, 2.0 / 3.0])
    return float(q[0]), float(q[1])


@dataclass
class MetricReport:
    """Per-group and average SR / SPL / DTG plus the grouping metadata."""

    groups: dict[str, dict] = field(default_factory=dict)
    average: dict = field(default_factory=dict)
    boundaries: tuple[float, float] = PAPER_GROUP_BOUNDS
    mode: str = "trisect"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["group", "episodes", "sr", "spl", "dtg"])
        for name in GROUP_NAMES:
            row = self.groups.get(name)
            if row is None:
                continue
            writer.writerow([name, row["episodes"],
                             f"{row['sr']:.4f}" if row["episodes"] else "",
                             f"{row['spl']:.4f}" if row["episodes"] else "",
                             f"{row['dtg']:.2f}" if row["episodes"] else ""])
        writer.writerow(["average", self.average["episodes"],
                         f"{self.average['sr']:.4f}", f"{self.average['spl']:.4f}",
                         f"{self.average['dtg']:.2f}"])
        return buf.getvalue()


def metric_report(logs: list[EpisodeLog], optimal_lengths: list[float],
                  gt_lengths: list[float] | None = None,
                  mode: str = "trisect") -> MetricReport:
    if not logs:
        raise EmptySet("metric report needs at least one episode")
    gt_lengths = gt_lengths if gt_lengths is not None else optimal_lengths
    groups = group_episodes(logs, gt_lengths, mode)
    report = MetricReport(mode=mode, boundaries=group_boundaries(gt_lengths, mode))
    for name, idx in groups.items():
        if idx:
            sub_logs = [logs[i] for i in idx]
            sub_l = [optimal_lengths[i] for i in idx]
            report.groups[name] = {"episodes": len(idx), "sr": success_rate(sub_logs),
                                   "spl": spl(sub_logs, sub_l), "dtg": dtg(sub_logs)}
        else:
            report.groups[name] = {"episodes": 0, "sr": None, "spl": None, "dtg": None}
    report.average = {"episodes": len(logs), "sr": success_rate(logs),
                      "spl": spl(logs, optimal_lengths), "dtg": dtg(logs)}
    return report


def progress_curve(log: EpisodeLog) -> list[float]:
    """Ratio d_t / d_0 per moment; above 1 means the agent is diverging."""
    d = log.distance_series()
    if d[0] <= log.epsilon:
        raise DegenerateStart(f"initial distance {d[0]:.1f} m within epsilon")
    return [dt / d[0] for dt in d]


def completion_percent(ratios: list[float]) -> list[float]:
    return [100.0 * (1.0 - r) for r in ratios]


@dataclass
class CdbResult:
    found: bool
    step: int | None = None
    pre_slope: float | None = None
    post_slope: float | None = None
    progress: list[float] = field(default_factory=list)


def _lsq_slope(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    t = np.arange(len(values), dtype=float)
    v = np.asarray(values, dtype=float)
    return float(np.polyfit(t, v, 1)[0])


def detect_cdb(distances: list[float], tol: float = 0.0,
               failed: bool = True) -> CdbResult:
    """Find the earliest step after which distance to goal never recovers.

    t* is the smallest index whose suffix is monotone non-decreasing (within
    tol) with net divergence; only failed episodes can bifurcate.
    """
    if len(distances) < 2:
        raise ValueError("need a distance series of length >= 2")
    d = list(map(float, distances))
    progress = [dt / d[0] for dt in d] if d[0] > 0 else []
    if not failed:
        return CdbResult(found=False, progress=progress)
    T = len(d) - 1
    t_star = None
    # Longest monotone-within-tol suffix; any earlier start would contain the
    # violation that ended it, so scanning inside it is exhaustive.
    start = T
    for j in range(T - 1, -1, -1):
        if d[j + 1] >= d[j] - tol:
            start = j
        else:
            break
    for t in range(start, T + 1):
        if d[T] > d[t] + tol:
            t_star = t
            break
    if t_star is None:
        return CdbResult(found=False, progress=progress)
    return CdbResult(found=True, step=t_star,
                     pre_slope=_lsq_slope(d[:t_star + 1]),
                     post_slope=_lsq_slope(d[t_star:]),
                     progress=progress)


def detect_cdb_log(log: EpisodeLog, tol: float = 0.0) -> CdbResult:
    return detect_cdb(log.distance_series(), tol=tol, failed=not log.succeeded())


def dataset_stats(scenarios: list) -> dict:
    """Fig-3-style corpus statistics: lengths, action mix, displacement vectors."""
    if not scenarios:
        raise EmptySet("dataset_stats needs at least one scenario")
    lengths = [s.ground_truth.length for s in scenarios]
    counts = {"horizontal": 0, "vertical": 0, "rotation": 0}
    for s in scenarios:
        for a in s.ground_truth.actions:
            action = Action(a) if not isinstance(a, Action) else a
            if action == Action.STOP:
                continue
            counts[action_category(action)] += 1
    total = sum(counts.values())
    proportions = {k: (v / total if total else 0.0) for k, v in counts.items()}
    displacements = [(np.asarray(s.goal_position) - s.start.position).tolist()
                     for s in scenarios]
    hist, edges = np.histogram(lengths, bins=10)
    return {
        "count": len(scenarios),
        "length_mean": float(np.mean(lengths)),
        "length_histogram": {"counts": hist.tolist(), "edges": edges.tolist()},
        "action_proportions": proportions,
        "action_counts": counts,
        "displacements": displacements,
        "down_fraction": float(np.mean([1.0 if dz < 0 else 0.0
                                        for _, _, dz in displacements])),
    }


def progress_csv(log: EpisodeLog) -> str:
    """CSV of (step, ratio, completion%) for external plotting."""
    ratios = progress_curve(log)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["step", "ratio", "completion_pct"])
    for t, (r, c) in enumerate(zip(ratios, completion_percent(ratios))):
        writer.writerow([t, f"{r:.6f}", f"{c:.4f}"])
    return buf.getvalue()
