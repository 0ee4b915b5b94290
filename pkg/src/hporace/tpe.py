"""Tree-structured Parzen estimation over the encoded search space.

History splits at a score quantile into good and bad sets (top quantile
is "good" under the maximization convention). Each set gets independent
per-dimension densities: truncated-Gaussian kernel density estimates for
continuous and integer dimensions, smoothed frequency tables for
categorical ones, each mixed with a uniform prior component of weight
1/(m+1). Proposals draw candidates from the good densities and keep the
candidate with the largest good/bad density ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, truncnorm

from .exceptions import InsufficientHistoryError
from .space import Config, SearchSpace, decode, snap
from .trials import History, Trial

GAMMA_DEFAULT = 0.25
N_CANDIDATES_DEFAULT = 24
BANDWIDTH_FLOOR = 0.05
#: Trials drawn from the space prior before any density is fitted.
MIN_STARTUP = 5


class KdeDensity:
    """Truncated-Gaussian KDE on [0, 1] mixed with a uniform component.

    With m members, each Gaussian and the uniform carry weight 1/(m+1).
    Bandwidth follows Scott's rule on the members, floored at
    ``BANDWIDTH_FLOOR`` of the unit interval.
    """

    def __init__(self, centers: np.ndarray):
        self.centers = np.asarray(centers, dtype=float).ravel()
        m = len(self.centers)
        if m == 0:
            raise ValueError("KDE needs at least one member")
        scott = float(np.std(self.centers, ddof=1)) * m ** (-0.2) if m >= 2 else 0.0
        self.bandwidth = max(BANDWIDTH_FLOOR, scott)
        # Normalizers of each Gaussian truncated to [0, 1].
        h = self.bandwidth
        self._trunc_mass = norm.cdf((1.0 - self.centers) / h) - norm.cdf(-self.centers / h)

    def pdf(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        h = self.bandwidth
        comp = norm.pdf((u[:, None] - self.centers[None, :]) / h) / (h * self._trunc_mass)
        m = len(self.centers)
        return (1.0 + comp.sum(axis=1)) / (m + 1)

    def log_pdf(self, u) -> np.ndarray:
        return np.log(self.pdf(u))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        m = len(self.centers)
        which = rng.integers(0, m + 1, size=n)
        out = np.empty(n)
        for i, j in enumerate(which):
            if j == m:
                out[i] = rng.uniform(0.0, 1.0)
            else:
                c, h = self.centers[j], self.bandwidth
                out[i] = truncnorm.rvs((0.0 - c) / h, (1.0 - c) / h, loc=c, scale=h, random_state=rng)
        return out


class CategoricalDensity:
    """Smoothed choice frequencies, expressed as a density over [0, 1].

    With m members over C choices, bin j has mass (count_j + 1/C)/(m+1):
    the uniform prior contributes one pseudo-member spread over all bins.
    """

    def __init__(self, bin_indices: np.ndarray, n_choices: int):
        idx = np.asarray(bin_indices, dtype=int).ravel()
        if len(idx) == 0:
            raise ValueError("categorical density needs at least one member")
        counts = np.bincount(idx, minlength=n_choices).astype(float)
        self.n_choices = n_choices
        self.probs = (counts + 1.0 / n_choices) / (len(idx) + 1)

    def pdf(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        bins = np.minimum((u * self.n_choices).astype(int), self.n_choices - 1)
        return self.probs[bins] * self.n_choices

    def log_pdf(self, u) -> np.ndarray:
        return np.log(self.pdf(u))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        bins = rng.choice(self.n_choices, size=n, p=self.probs)
        return (bins + 0.5) / self.n_choices


@dataclass(frozen=True)
class TpeModel:
    """Fitted good/bad density pair over the encoded space."""

    space: SearchSpace
    good: np.ndarray
    bad: np.ndarray
    good_densities: tuple = field(repr=False, default=())
    bad_densities: tuple = field(repr=False, default=())
    gamma: float = GAMMA_DEFAULT
    n_candidates: int = N_CANDIDATES_DEFAULT

    def log_ratio(self, U: np.ndarray) -> np.ndarray:
        """log l(u) - log g(u) at a batch of encoded points."""
        U = np.atleast_2d(U)
        total = np.zeros(U.shape[0])
        for d in range(self.space.dimension):
            total += self.good_densities[d].log_pdf(U[:, d])
            total -= self.bad_densities[d].log_pdf(U[:, d])
        return total


def split(history: History, gamma: float = GAMMA_DEFAULT) -> tuple[list[Trial], list[Trial], float]:
    """Partition ok trials into the top-quantile good set and the rest.

    Good holds the max(1, ceil(gamma*n)) best trials by score; ties go
    to the earlier index. Returns (good, bad, y_star) with y_star the
    lowest score inside the good set.
    """
    ok = history.ok_trials()
    n = len(ok)
    if n < 2:
        raise InsufficientHistoryError(f"need at least 2 successful trials to split, got {n}")
    n_good = max(1, math.ceil(gamma * n))
    ranked = sorted(ok, key=lambda t: (-t.score, t.index))
    good = ranked[:n_good]
    bad = ranked[n_good:]
    return good, bad, good[-1].score


def _fit_dim(values: np.ndarray, param) -> KdeDensity | CategoricalDensity:
    if param.kind == "categorical":
        bins = np.minimum((values * param.n_bins).astype(int), param.n_bins - 1)
        return CategoricalDensity(bins, param.n_bins)
    return KdeDensity(values)


def fit_densities(
    good_set: np.ndarray,
    bad_set: np.ndarray,
    space: SearchSpace,
    gamma: float = GAMMA_DEFAULT,
    n_candidates: int = N_CANDIDATES_DEFAULT,
) -> TpeModel:
    """Per-dimension densities for encoded good and bad sets (both non-empty)."""
    good_set = np.atleast_2d(np.asarray(good_set, dtype=float))
    bad_set = np.atleast_2d(np.asarray(bad_set, dtype=float))
    if good_set.shape[0] == 0 or bad_set.shape[0] == 0:
        raise InsufficientHistoryError("both good and bad sets must be non-empty")
    good_d = tuple(_fit_dim(good_set[:, d], p) for d, p in enumerate(space.params))
    bad_d = tuple(_fit_dim(bad_set[:, d], p) for d, p in enumerate(space.params))
    return TpeModel(
        space=space,
        good=good_set,
        bad=bad_set,
        good_densities=good_d,
        bad_densities=bad_d,
        gamma=gamma,
        n_candidates=n_candidates,
    )


def propose_tpe(model: TpeModel, space: SearchSpace, rng: np.random.Generator) -> Config:
    """Draw candidates from the good densities, return the best ratio.

    Candidates snap onto representable configs before scoring so the
    reported ratio matches the returned config. Deterministic under a
    fixed generator; ties break to the first candidate drawn.
    """
    n = model.n_candidates
    cand = np.empty((n, space.dimension))
    for d in range(space.dimension):
        cand[:, d] = model.good_densities[d].sample(rng, n)
    cand = np.array([snap(space, u) for u in cand])
    scores = model.log_ratio(cand)
    return decode(space, cand[int(np.argmax(scores))])
