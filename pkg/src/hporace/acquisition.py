"""Acquisition functions over the GP posterior and the inner maximizer.

Expected improvement follows the closed form (mu - best) * Phi(z) +
sigma * phi(z) under the maximization convention; UCB is mu +
sqrt(beta * variance). The candidate search probes the encoded cube with
a quasi-random design, then refines the best probes coordinate-wise,
snapping discrete dimensions onto their bin centers so acquisition values
always correspond to representable configs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc

from .gp import GpPosterior
from .space import Config, SearchSpace, decode, snap

N_PROBES = 1024
N_REFINE_STARTS = 8
EI = "ei"
UCB = "ucb"


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to maximize and its references."""

    kind: str = EI
    ucb_beta: float = 2.0
    incumbent_best: float = 0.0

    def __post_init__(self):
        if self.kind not in (EI, UCB):
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.ucb_beta <= 0:
            raise ValueError(f"ucb_beta must be positive, got {self.ucb_beta}")


def ei(mean, variance, best):
    """Expected improvement over ``best``; zero-variance reduces to max(0, mean-best)."""
    mean = np.asarray(mean, dtype=float)
    var = np.maximum(np.asarray(variance, dtype=float), 0.0)
    sigma = np.sqrt(var)
    improve = mean - best
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improve / np.where(sigma > 0, sigma, 1.0), 0.0)
        value = np.where(
            sigma > 0,
            improve * norm.cdf(z) + sigma * norm.pdf(z),
            np.maximum(improve, 0.0),
        )
    value = np.maximum(value, 0.0)
    return float(value) if value.ndim == 0 else value


def ucb(mean, variance, beta):
    """Upper confidence bound mu + sqrt(beta * variance)."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    mean = np.asarray(mean, dtype=float)
    var = np.maximum(np.asarray(variance, dtype=float), 0.0)
    value = mean + np.sqrt(beta * var)
    return float(value) if value.ndim == 0 else value


def acquisition_values(posterior: GpPosterior, spec: AcquisitionSpec, U: np.ndarray) -> np.ndarray:
    """Acquisition at a batch of encoded points (m, k)."""
    mean, var = posterior.predict(np.atleast_2d(U))
    if spec.kind == EI:
        return np.atleast_1d(ei(mean, var, spec.incumbent_best))
    return np.atleast_1d(ucb(mean, var, spec.ucb_beta))


def _snap_batch(space: SearchSpace, U: np.ndarray) -> np.ndarray:
    return np.array([snap(space, u) for u in np.atleast_2d(U)])


def _exhaustive_bins(space: SearchSpace) -> np.ndarray | None:
    """All bin-center combinations for a fully discrete space, if small enough."""
    if not all(p.is_discrete for p in space.params):
        return None
    total = math.prod(p.n_bins for p in space.params)
    if total > N_PROBES:
        return None
    axes = [[(i + 0.5) / p.n_bins for i in range(p.n_bins)] for p in space.params]
    return np.array(list(itertools.product(*axes)))


_REFINE_STEPS = [0.25 * 0.5**j for j in range(7)]


def propose(
    posterior: GpPosterior,
    space: SearchSpace,
    spec: AcquisitionSpec,
    rng: np.random.Generator,
    n_probes: int = N_PROBES,
    n_starts: int = N_REFINE_STARTS,
) -> Config:
    """Config maximizing the acquisition over the encoded cube.

    Probes quasi-random points (exhaustively for small all-discrete
    spaces), then runs coordinate refinement from the best probes.
    Deterministic under a fixed generator; ties break to the earliest
    candidate.
    """
    probes = _exhaustive_bins(space)
    if probes is None:
        sobol = qmc.Sobol(d=space.dimension, scramble=True, seed=rng)
        raw = sobol.random_base2(int(math.ceil(math.log2(n_probes))))[:n_probes]
        probes = _snap_batch(space, raw)
    values = acquisition_values(posterior, spec, probes)
    order = np.argsort(-values, kind="stable")
    best_u = probes[order[0]].copy()
    best_val = float(values[order[0]])

    for idx in order[:n_starts]:
        u = probes[idx].copy()
        val = float(values[idx])
        for _ in range(2):
            for d in range(space.dimension):
                cands = []
                for step in _REFINE_STEPS:
                    for sign in (1.0, -1.0):
                        c = u.copy()
                        c[d] = min(1.0, max(0.0, c[d] + sign * step))
                        cands.append(c)
                cands = _snap_batch(space, np.array(cands))
                cand_vals = acquisition_values(posterior, spec, cands)
                j = int(np.argmax(cand_vals))
                if cand_vals[j] > val:
                    val = float(cand_vals[j])
                    u = cands[j]
        if val > best_val:
            best_val = val
            best_u = u
    return decode(space, best_u)
