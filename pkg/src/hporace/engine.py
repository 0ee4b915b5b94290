"""Sequential model-based optimization driver and baselines.

One run evaluates up to ``budget`` configurations strictly sequentially:
an initial design (scrambled Sobol for GP-BO, prior samples for TPE),
then alternating surrogate fits and acquisition maximization. Random and
grid search hide behind the same interface so races compare like with
like. Every trial is recorded and flushed before the next proposal.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable

import numpy as np
from scipy.stats import qmc

from . import rng as streams
from .acquisition import AcquisitionSpec, propose
from .exceptions import ConfigError, GpFitError, InsufficientHistoryError, RunError
from .gp import fit
from .objectives import ObjectiveRequest, ObjectiveResponse
from .space import Config, SearchSpace, decode, encode, grid, sample
from .tpe import MIN_STARTUP, fit_densities, propose_tpe, split
from .trials import FAILED, OK, TIMEOUT, History, Trial

log = logging.getLogger(__name__)

GP_BO = "gp_bo"
TPE = "tpe"
GRID = "grid"
RANDOM = "random"
KINDS = (GP_BO, TPE, GRID, RANDOM)


@dataclass(frozen=True)
class OptimizerSpec:
    """Everything needed to reproduce one optimizer's runs."""

    kind: str
    budget: int
    seed: int = 0
    n0: int = 5
    name: str | None = None
    time_budget_s: float | None = None
    acquisition: str = "ei"
    ucb_beta: float = 2.0
    gamma: float = 0.25
    n_candidates: int = 24
    levels: tuple[int, ...] | None = None
    deadline_s: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown optimizer kind {self.kind!r}, expected one of {KINDS}")
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.n0 < 1:
            raise ConfigError(f"n0 must be >= 1, got {self.n0}")
        if self.kind in (GP_BO, TPE) and self.n0 > self.budget:
            raise ConfigError(f"n0 ({self.n0}) must not exceed the budget ({self.budget})")
        if self.kind == GRID and self.levels is None:
            raise ConfigError("grid search requires levels per parameter")
        if self.levels is not None:
            object.__setattr__(self, "levels", tuple(int(n) for n in self.levels))

    @property
    def display_name(self) -> str:
        return self.name or self.kind


_SPEC_FIELDS = {
    "kind", "budget", "seed", "n0", "name", "time_budget_s", "acquisition",
    "ucb_beta", "gamma", "n_candidates", "levels", "deadline_s",
}


def spec_from_dict(doc: dict) -> OptimizerSpec:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError('optimizer description needs a "kind" field')
    unknown = set(doc) - _SPEC_FIELDS
    if unknown:
        raise ConfigError(f"unknown optimizer fields: {sorted(unknown)}")
    if "budget" not in doc:
        raise ConfigError("optimizer description needs a budget")
    return OptimizerSpec(**doc)


def spec_to_dict(spec: OptimizerSpec) -> dict:
    doc = {
        "kind": spec.kind,
        "budget": spec.budget,
        "seed": spec.seed,
        "n0": spec.n0,
        "name": spec.name,
        "time_budget_s": spec.time_budget_s,
        "acquisition": spec.acquisition,
        "ucb_beta": spec.ucb_beta,
        "gamma": spec.gamma,
        "n_candidates": spec.n_candidates,
        "levels": list(spec.levels) if spec.levels is not None else None,
        "deadline_s": spec.deadline_s,
    }
    return doc


@dataclass
class RunResult:
    """Outcome of one run: full history, incumbent, measured wall clock."""

    spec: OptimizerSpec
    run_seed: int
    history: History
    wall_clock_s: float = 0.0
    repeat: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def best_trial(self) -> Trial | None:
        return self.history.incumbent

    @property
    def best_score(self) -> float | None:
        trial = self.history.incumbent
        return None if trial is None else trial.score


def sobol_design(space: SearchSpace, n: int, seed_stream: np.random.Generator) -> list[Config]:
    """First ``n`` points of the scrambled Sobol sequence, decoded into configs."""
    sobol = qmc.Sobol(d=space.dimension, scramble=True, seed=seed_stream)
    m = max(1, int(math.ceil(math.log2(max(n, 1)))))
    pts = sobol.random_base2(m)[:n]
    return [decode(space, u) for u in pts]


class _Proposer:
    """Per-run proposal state: initial design, surrogate-backed proposals."""

    def __init__(self, spec: OptimizerSpec, space: SearchSpace, run_seed: int):
        self.spec = spec
        self.space = space
        self.run_seed = run_seed
        self._design_rng = streams.substream(run_seed, streams.DESIGN)
        if spec.kind == GP_BO:
            self._design = sobol_design(space, spec.n0, self._design_rng)
        elif spec.kind == GRID:
            self._design = grid(space, spec.levels)
        else:
            self._design = []
        self._startup = max(spec.n0, MIN_STARTUP) if spec.kind == TPE else spec.n0

    @property
    def grid_exhausted_at(self) -> int | None:
        return len(self._design) if self.spec.kind == GRID else None

    def next_config(self, t: int, history: History) -> Config:
        spec = self.spec
        if spec.kind == RANDOM:
            return sample(self.space, self._design_rng)
        if spec.kind == GRID:
            return self._design[t - 1]
        if spec.kind == GP_BO:
            if t <= spec.n0:
                return self._design[t - 1]
            return self._propose_gp(t, history)
        if t <= self._startup:
            return sample(self.space, self._design_rng)
        return self._propose_tpe(t, history)

    def _fallback(self, t: int) -> Config:
        return sample(self.space, streams.substream(self.run_seed, streams.PROPOSAL, t))

    def _propose_gp(self, t: int, history: History) -> Config:
        ok = history.ok_trials()
        if len(ok) < 2:
            return self._fallback(t)
        X = np.array([encode(self.space, trial.config) for trial in ok])
        y = np.array([trial.score for trial in ok])
        try:
            posterior = fit(X, y, rng=streams.substream(self.run_seed, streams.FIT, t))
        except GpFitError as exc:
            log.warning("trial %d: surrogate fit failed (%s); sampling from prior", t, exc)
            return self._fallback(t)
        acq = AcquisitionSpec(
            kind=self.spec.acquisition,
            ucb_beta=self.spec.ucb_beta,
            incumbent_best=float(np.max(y)),
        )
        return propose(posterior, self.space, acq, streams.substream(self.run_seed, streams.PROPOSAL, t))

    def _propose_tpe(self, t: int, history: History) -> Config:
        try:
            good, bad, _ = split(history, self.spec.gamma)
        except InsufficientHistoryError:
            return self._fallback(t)
        good_enc = np.array([encode(self.space, trial.config) for trial in good])
        bad_enc = np.array([encode(self.space, trial.config) for trial in bad])
        model = fit_densities(
            good_enc, bad_enc, self.space,
            gamma=self.spec.gamma, n_candidates=self.spec.n_candidates,
        )
        return propose_tpe(model, self.space, streams.substream(self.run_seed, streams.PROPOSAL, t))


def run(
    spec: OptimizerSpec,
    space: SearchSpace,
    objective,
    run_seed: int | None = None,
    log_file: IO[str] | None = None,
    repeat: int = 0,
) -> RunResult:
    """Execute one optimization run of up to ``spec.budget`` trials.

    A failing objective marks its trial failed and the run continues;
    protocol violations abort. Raises ``RunError`` if the run ends with
    zero successful trials.
    """
    seed = spec.seed if run_seed is None else run_seed
    proposer = _Proposer(spec, space, seed)
    history = History(space, log=log_file)
    started = time.perf_counter()
    cumulative = 0.0
    try:
        for t in range(1, spec.budget + 1):
            if spec.time_budget_s is not None and t > 1 and cumulative >= spec.time_budget_s:
                break
            if proposer.grid_exhausted_at is not None and t > proposer.grid_exhausted_at:
                break
            config = proposer.next_config(t, history)
            request = ObjectiveRequest(
                trial_index=t,
                params=space.to_params(config),
                deadline_s=spec.deadline_s,
            )
            eval_started = time.perf_counter()
            response: ObjectiveResponse = objective.evaluate(
                request, streams.substream(seed, streams.NOISE, t)
            )
            measured = time.perf_counter() - eval_started
            duration = response.duration_s if response.duration_s is not None else measured
            status = response.status if response.status in (OK, FAILED, TIMEOUT) else FAILED
            cumulative += duration
            history.record(
                Trial(
                    index=t,
                    config=config,
                    score=response.score if status == OK else None,
                    duration_s=duration,
                    cumulative_s=cumulative,
                    status=status,
                )
            )
    finally:
        if hasattr(objective, "close"):
            objective.close()
    wall = time.perf_counter() - started
    if history.incumbent is None:
        raise RunError(f"run produced no successful trials out of {len(history)}")
    return RunResult(
        spec=spec, run_seed=seed, history=history, wall_clock_s=wall, repeat=repeat
    )


def race(
    specs: list[OptimizerSpec],
    space: SearchSpace,
    objective_factory: Callable[[], object],
    repeats: int = 1,
    jobs: int = 1,
    log_provider: Callable[[int, OptimizerSpec, int], IO[str] | None] | None = None,
) -> list[RunResult]:
    """Run every spec ``repeats`` times with seeds seed+r.

    Each run gets a fresh objective instance so state cannot leak between
    runs; one run's failure is recorded, not propagated. Results come
    back spec-major, repeat-minor, independent of scheduling.
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")

    def one(spec_idx: int, spec: OptimizerSpec, r: int) -> RunResult:
        log_file = log_provider(spec_idx, spec, r) if log_provider is not None else None
        try:
            return run(
                spec, space, objective_factory(),
                run_seed=spec.seed + r, log_file=log_file, repeat=r,
            )
        except RunError as exc:
            return RunResult(
                spec=spec, run_seed=spec.seed + r, history=History(space),
                repeat=r, error=str(exc),
            )
        finally:
            if log_file is not None:
                log_file.close()

    tasks = [(i, spec, r) for i, spec in enumerate(specs) for r in range(repeats)]
    if jobs <= 1:
        return [one(*task) for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(one, *task) for task in tasks]
        return [f.result() for f in futures]
