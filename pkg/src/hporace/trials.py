"""Optimization history: evaluated trials, incumbent tracking, run logs.

History is append-only with a single writer. Each recorded trial is
serialized to one JSON line and flushed before the engine may propose
again, so a crash never loses an evaluated result. Reloading a log
reconstructs a history whose re-serialization is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO

from .exceptions import ConsistencyError, EmptyHistoryError, LogParseError
from .space import Config, SearchSpace

OK = "ok"
FAILED = "failed"
TIMEOUT = "timeout"
STATUSES = (OK, FAILED, TIMEOUT)


@dataclass(frozen=True)
class Trial:
    """One evaluated configuration.

    ``cumulative_s`` is the run's total recorded time when this trial
    completed; failed and timed-out trials carry no score.
    """

    index: int
    config: Config
    score: float | None
    duration_s: float
    cumulative_s: float
    status: str = OK

    def __post_init__(self):
        if self.index < 1:
            raise ConsistencyError(f"trial index must be >= 1, got {self.index}")
        if self.status not in STATUSES:
            raise ConsistencyError(f"unknown status {self.status!r}")
        if self.status == OK and self.score is None:
            raise ConsistencyError("ok trials must carry a score")
        if self.status != OK and self.score is not None:
            raise ConsistencyError(f"{self.status} trials carry no score")
        if self.duration_s < 0:
            raise ConsistencyError(f"duration must be >= 0, got {self.duration_s}")


class History:
    """Append-only trial list with incumbent tracking and optional run log."""

    def __init__(self, space: SearchSpace, log: IO[str] | None = None):
        self.space = space
        self.trials: list[Trial] = []
        self.incumbent_index: int | None = None
        self._log = log

    def __len__(self) -> int:
        return len(self.trials)

    @property
    def incumbent(self) -> Trial | None:
        if self.incumbent_index is None:
            return None
        return self.trials[self.incumbent_index - 1]

    def ok_trials(self) -> list[Trial]:
        return [t for t in self.trials if t.status == OK]

    def record(self, trial: Trial) -> None:
        """Append a trial, update the incumbent, and flush the run log.

        The incumbent only moves on a strictly better ok score, so ties
        resolve to the earliest index.
        """
        if trial.index != len(self.trials) + 1:
            raise ConsistencyError(
                f"expected trial index {len(self.trials) + 1}, got {trial.index}"
            )
        if self.trials and trial.cumulative_s < self.trials[-1].cumulative_s:
            raise ConsistencyError("cumulative time must be non-decreasing")
        self.space.validate_config(trial.config)
        self.trials.append(trial)
        if trial.status == OK:
            best = self.incumbent
            if best is None or trial.score > best.score:
                self.incumbent_index = trial.index
        if self._log is not None:
            self._log.write(trial_to_line(self.space, trial) + "\n")
            self._log.flush()

    def best_so_far_curve(self) -> list[tuple[float, float]]:
        """Step function (cumulative_s, best score so far), one point per ok trial."""
        curve = []
        best = None
        for t in self.trials:
            if t.status != OK:
                continue
            best = t.score if best is None else max(best, t.score)
            curve.append((t.cumulative_s, best))
        if not curve:
            raise EmptyHistoryError("history contains no successful trials")
        return curve


# -- persistence ----------------------------------------------------------------


def trial_to_line(space: SearchSpace, trial: Trial) -> str:
    """Canonical single-line JSON for a trial (full-precision numbers)."""
    record = {
        "index": trial.index,
        "params": space.to_params(trial.config),
        "score": trial.score,
        "duration_s": trial.duration_s,
        "cumulative_s": trial.cumulative_s,
        "status": trial.status,
    }
    return json.dumps(record)


def trial_from_line(space: SearchSpace, line: str) -> Trial:
    record = json.loads(line)
    return Trial(
        index=record["index"],
        config=space.from_params(record["params"]),
        score=record["score"],
        duration_s=record["duration_s"],
        cumulative_s=record["cumulative_s"],
        status=record["status"],
    )


def load_history(path, space: SearchSpace) -> History:
    """Rebuild a history by replaying a trials.jsonl file."""
    history = History(space)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                trial = trial_from_line(space, line)
            except (KeyError, ValueError, ConsistencyError) as exc:
                raise LogParseError(str(path), line_no, str(exc)) from exc
            try:
                history.record(trial)
            except ConsistencyError as exc:
                raise LogParseError(str(path), line_no, str(exc)) from exc
    return history
