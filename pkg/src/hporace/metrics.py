"""Benchmark metrics and report rendering.

Covers balanced class accuracy, the score-per-minute efficiency quotient,
time-to-threshold crossings over run logs, and the three summary tables
(threshold times, best configurations, efficiency ranking) in both text
and JSON form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .engine import RunResult
from .exceptions import MetricError
from .trials import History

DEFAULT_THRESHOLDS = (0.80, 0.90)


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class true-positive and false-negative counts."""

    tp: tuple[int, ...]
    fn: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tp", tuple(int(v) for v in self.tp))
        object.__setattr__(self, "fn", tuple(int(v) for v in self.fn))
        if len(self.tp) != len(self.fn):
            raise MetricError(f"{len(self.tp)} tp entries vs {len(self.fn)} fn entries")
        if len(self.tp) < 2:
            raise MetricError("need at least two classes")
        if any(v < 0 for v in self.tp + self.fn):
            raise MetricError("counts must be non-negative")


def bca(counts: ConfusionCounts) -> float:
    """Balanced class accuracy: unweighted mean of per-class recall.

    Classes without support are excluded from the average with a warning;
    if no class has support the metric is undefined.
    """
    recalls = []
    skipped = []
    for c, (tp, fn) in enumerate(zip(counts.tp, counts.fn)):
        if tp + fn == 0:
            skipped.append(c)
            continue
        recalls.append(tp / (tp + fn))
    if not recalls:
        raise MetricError("balanced accuracy undefined: no class has support")
    if skipped:
        warnings.warn(f"classes without support excluded from BCA: {skipped}")
    return sum(recalls) / len(recalls)


def efficiency(best_score: float, minutes_to_best: float) -> float:
    """Best score divided by the minutes taken to reach it."""
    if minutes_to_best <= 0:
        raise MetricError(f"minutes must be positive, got {minutes_to_best}")
    return best_score / minutes_to_best


@dataclass(frozen=True)
class Crossing:
    threshold: float
    minutes: float | None  # None = not reached within budget
    trial: int | None


def threshold_times(history: History, thresholds) -> list[Crossing]:
    """First trial whose best-so-far score strictly exceeds each threshold."""
    thresholds = list(thresholds)
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise MetricError(f"thresholds must be ascending, got {thresholds}")
    out = []
    for thr in thresholds:
        best = None
        hit = None
        for t in history.trials:
            if t.status != "ok":
                continue
            best = t.score if best is None else max(best, t.score)
            if best > thr:
                hit = Crossing(thr, t.cumulative_s / 60.0, t.index)
                break
        out.append(hit if hit is not None else Crossing(thr, None, None))
    return out


def time_to_best(history: History) -> tuple[float, int]:
    """Minutes and trial index at which the final incumbent was first achieved."""
    incumbent = history.incumbent
    if incumbent is None:
        raise MetricError("history has no successful trials")
    return incumbent.cumulative_s / 60.0, incumbent.index


def _lower_median_index(values: list[float]) -> int:
    """Index (into the given list) of the lower median after sorting."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    return order[(len(values) - 1) // 2]


def _aggregate_group(name: str, results: list[RunResult], thresholds) -> dict:
    """One report row: the lower-median repeat with min-max spread."""
    good = [r for r in results if r.ok]
    row: dict = {"optimizer": name, "repeats": len(results), "failed_runs": len(results) - len(good)}
    if not good:
        row["crossings"] = [
            {"threshold": thr, "minutes": None, "trial": None, "reached": 0,
             "minutes_min": None, "minutes_max": None}
            for thr in thresholds
        ]
        row["best"] = None
        row["params"] = None
        row["efficiency"] = None
        return row

    # Representative repeat: the lower median by best score (row stays internally
    # consistent: its config, time to best, and efficiency belong to one run).
    scores = [r.best_score for r in good]
    rep = good[_lower_median_index(scores)]
    rep_minutes, rep_trial = time_to_best(rep.history)

    crossings = []
    for k, thr in enumerate(thresholds):
        per_run = [(threshold_times(r.history, [thr])[0], r) for r in good]
        reached = [(c.minutes, c.trial) for c, _ in per_run if c.minutes is not None]
        entry: dict = {"threshold": thr, "reached": len(reached)}
        if reached and 2 * len(reached) >= len(good):
            minutes = [m for m, _ in reached]
            med = _lower_median_index(minutes)
            entry.update(
                minutes=reached[med][0], trial=reached[med][1],
                minutes_min=min(minutes), minutes_max=max(minutes),
            )
        else:
            entry.update(minutes=None, trial=None, minutes_min=None, minutes_max=None)
        crossings.append(entry)
    row["crossings"] = crossings
    row["best"] = {
        "score": rep.best_score,
        "minutes": rep_minutes,
        "trial": rep_trial,
        "score_min": min(scores),
        "score_max": max(scores),
    }
    row["params"] = rep.history.space.to_params(rep.best_trial.config)
    row["efficiency"] = efficiency(rep.best_score, rep_minutes) if rep_minutes > 0 else None
    return row


def build_report(results: list[RunResult], thresholds=DEFAULT_THRESHOLDS) -> dict:
    """Aggregate race results into the machine-readable report document."""
    thresholds = [float(t) for t in thresholds]
    groups: dict[str, list[RunResult]] = {}
    for r in results:
        groups.setdefault(r.spec.display_name, []).append(r)
    rows = [_aggregate_group(name, rs, thresholds) for name, rs in groups.items()]
    rows.sort(key=lambda row: (-(row["efficiency"] if row["efficiency"] is not None else float("-inf")),
                               row["optimizer"]))
    return {"thresholds": thresholds, "rows": rows}


# -- text rendering ---------------------------------------------------------------


def _fmt_crossing(entry: dict, repeats: int) -> str:
    if entry["minutes"] is None:
        if repeats > 1:
            return f"not reached ({entry['reached']}/{repeats})"
        return "not reached"
    txt = f"{entry['minutes']:.1f} min (trial {entry['trial']})"
    if repeats > 1 and entry["minutes_min"] is not None:
        txt += f" [{entry['minutes_min']:.1f}-{entry['minutes_max']:.1f}]"
    return txt


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    sep = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(headers), sep] + [fmt(r) for r in rows])


def render_text(report: dict) -> str:
    """Human-readable threshold, best-config, and efficiency tables."""
    thresholds = report["thresholds"]
    rows = report["rows"]

    t1 = []
    for row in rows:
        cells = [row["optimizer"]]
        for entry in row["crossings"]:
            cells.append(_fmt_crossing(entry, row["repeats"]))
        t1.append(cells)
    part1 = _table(["optimizer"] + [f">{thr:g}" for thr in thresholds], t1)

    param_names: list[str] = []
    for row in rows:
        if row["params"]:
            param_names = list(row["params"].keys())
            break
    t2 = []
    for row in rows:
        if row["best"] is None:
            t2.append([row["optimizer"]] + ["-"] * (len(param_names) + 2))
            continue
        cells = [row["optimizer"]]
        cells += [f"{row['params'][n]:g}" if isinstance(row["params"][n], float) else str(row["params"][n])
                  for n in param_names]
        score = row["best"]["score"]
        cells.append(f"{score:.3f}")
        if row["repeats"] > 1:
            cells[-1] += f" [{row['best']['score_min']:.3f}-{row['best']['score_max']:.3f}]"
        cells.append(f"{row['best']['minutes']:.1f} min")
        t2.append(cells)
    part2 = _table(["optimizer"] + param_names + ["best score", "time to best"], t2)

    t3 = []
    for row in rows:
        if row["best"] is None:
            t3.append([row["optimizer"], "-", "-", "-"])
            continue
        t3.append([
            row["optimizer"],
            f"{row['best']['score']:.3f}",
            f"{row['best']['minutes']:.1f}",
            f"{row['efficiency']:.4f}" if row["efficiency"] is not None else "-",
        ])
    part3 = _table(["optimizer", "best score", "minutes to best", "efficiency"], t3)

    return (
        "Time to threshold\n" + part1 + "\n\n"
        "Best configuration within budget\n" + part2 + "\n\n"
        "Efficiency ranking\n" + part3 + "\n"
    )
