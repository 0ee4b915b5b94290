"""Gaussian-process regression over encoded configurations.

Matern 5/2 kernel with per-dimension (ARD) lengthscales, exact posterior
via Cholesky factorization, and kernel hyperparameters fitted by
multi-start maximization of the log marginal likelihood. Targets are
standardized internally; predictions are returned on the original scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .exceptions import GpFitError

JITTER_FLOOR = 1e-10
JITTER_MAX = 1e-4

#: Default box constraints for hyperparameter fitting (standardized targets).
DEFAULT_BOUNDS = {
    "lengthscale": (1e-3, 10.0),
    "signal_variance": (1e-3, 10.0),
    "noise_variance": (1e-8, 1.0),
}

SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelParams:
    """Matern 5/2 hyperparameters: ARD lengthscales, signal and noise variances."""

    lengthscales: tuple[float, ...]
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", tuple(float(l) for l in self.lengthscales))
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError(f"lengthscales must be positive, got {self.lengthscales}")
        if self.signal_variance <= 0:
            raise ValueError(f"signal variance must be positive, got {self.signal_variance}")
        if self.noise_variance < JITTER_FLOOR:
            raise ValueError(
                f"noise variance must be >= jitter floor {JITTER_FLOOR}, got {self.noise_variance}"
            )


def matern52(params: KernelParams, X: np.ndarray, Z: np.ndarray | None = None) -> np.ndarray:
    """Cross-covariance matrix k(X, Z); Z defaults to X."""
    X = np.atleast_2d(X)
    Z = X if Z is None else np.atleast_2d(Z)
    ell = np.asarray(params.lengthscales)
    diff = (X[:, None, :] - Z[None, :, :]) / ell
    r = np.sqrt(np.maximum(np.sum(diff * diff, axis=-1), 0.0))
    return params.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def _chol_with_jitter(K_noisy: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter from the floor on failure."""
    try:
        return cholesky(K_noisy, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_FLOOR
    eye = np.eye(K_noisy.shape[0])
    while jitter <= JITTER_MAX:
        try:
            return cholesky(K_noisy + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    cond = float(np.linalg.cond(K_noisy))
    raise GpFitError(
        f"covariance matrix singular after jitter escalation to {JITTER_MAX:g} "
        f"(condition estimate {cond:.3e})"
    )


class GpPosterior:
    """Fitted posterior exposing predictive mean and variance.

    Immutable once constructed; predictions are safe to evaluate
    concurrently.
    """

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        params: KernelParams,
        y_mean: float = 0.0,
        y_std: float = 1.0,
        log_marginal: float | None = None,
    ):
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.y = np.asarray(y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"{self.X.shape[0]} inputs vs {self.y.shape[0]} targets")
        if self.X.shape[1] != len(params.lengthscales):
            raise ValueError(
                f"{self.X.shape[1]}-dim inputs vs {len(params.lengthscales)} lengthscales"
            )
        self.params = params
        self.y_mean = float(y_mean)
        self.y_std = float(y_std)
        self.log_marginal = log_marginal
        self._y_internal = (self.y - self.y_mean) / self.y_std
        K = matern52(params, self.X) + params.noise_variance * np.eye(len(self.y))
        self.chol, self.jitter = _chol_with_jitter(K)
        self.alpha = cho_solve((self.chol, True), self._y_internal)

    @classmethod
    def from_params(cls, X, y, params: KernelParams) -> "GpPosterior":
        """Exact posterior at fixed hyperparameters, no target standardization."""
        return cls(X, y, params)

    @property
    def n_train(self) -> int:
        return len(self.y)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def predict(self, x) -> tuple[np.ndarray, np.ndarray] | tuple[float, float]:
        """Predictive mean and variance of the latent function at ``x``.

        Accepts one point of shape (k,) or a batch of shape (m, k); variance
        is clipped at zero.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim}-dim points, got shape {x.shape}")
        k_star = matern52(self.params, self.X, pts)
        mean = k_star.T @ self.alpha
        v = solve_triangular(self.chol, k_star, lower=True)
        var = self.params.signal_variance - np.sum(v * v, axis=0)
        var = np.maximum(var, 0.0)
        mean = self.y_mean + self.y_std * mean
        var = self.y_std**2 * var
        if single:
            return float(mean[0]), float(var[0])
        return mean, var


def predict(posterior: GpPosterior, x):
    return posterior.predict(x)


# -- marginal likelihood -----------------------------------------------------------


def log_marginal_likelihood(
    params: KernelParams, X: np.ndarray, y: np.ndarray, with_grad: bool = False
):
    """Log marginal likelihood of the data; optionally its gradient.

    The gradient is taken with respect to the log of each hyperparameter,
    ordered (log lengthscales..., log signal variance, log noise variance).
    """
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=float).ravel()
    n, k = X.shape
    ell = np.asarray(params.lengthscales)
    diff = (X[:, None, :] - X[None, :, :]) / ell
    sq = diff * diff
    r = np.sqrt(np.maximum(np.sum(sq, axis=-1), 0.0))
    decay = np.exp(-SQRT5 * r)
    Kf = params.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * decay
    K = Kf + params.noise_variance * np.eye(n)
    L, _ = _chol_with_jitter(K)
    alpha = cho_solve((L, True), y)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    if not with_grad:
        return lml
    K_inv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - K_inv
    # d k / d log ell_d = (5/3) sigma^2 exp(-sqrt5 r) (1 + sqrt5 r) * (delta_d / ell_d)^2
    base = (5.0 / 3.0) * params.signal_variance * decay * (1.0 + SQRT5 * r)
    grad = np.empty(k + 2)
    for d in range(k):
        grad[d] = 0.5 * float(np.sum(W * (base * sq[:, :, d])))
    grad[k] = 0.5 * float(np.sum(W * Kf))
    grad[k + 1] = 0.5 * params.noise_variance * float(np.trace(W))
    return lml, grad


def _standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(y))
    std = float(np.std(y))
    if std < 1e-12:
        std = 1.0
    return (y - mean) / std, mean, std


def fit(
    X,
    y,
    bounds: dict | None = None,
    n_restarts: int = 8,
    rng: np.random.Generator | None = None,
) -> GpPosterior:
    """Fit kernel hyperparameters by multi-start L-BFGS-B on the marginal likelihood.

    One start from defaults plus ``n_restarts`` random restarts drawn
    log-uniformly inside the bounds. Targets are standardized to zero
    mean and unit variance before fitting; the returned posterior
    de-standardizes its predictions. Needs at least two observations.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, k = X.shape
    if n < 2:
        raise GpFitError(f"need at least 2 observations to fit, got {n}")
    if rng is None:
        rng = np.random.default_rng(0)
    bounds = {**DEFAULT_BOUNDS, **(bounds or {})}
    y_int, y_mean, y_std = _standardize(y)

    log_bounds = (
        [tuple(np.log(bounds["lengthscale"]))] * k
        + [tuple(np.log(bounds["signal_variance"]))]
        + [tuple(np.log(bounds["noise_variance"]))]
    )

    def unpack(theta: np.ndarray) -> KernelParams:
        return KernelParams(
            lengthscales=tuple(np.exp(theta[:k])),
            signal_variance=float(np.exp(theta[k])),
            noise_variance=max(float(np.exp(theta[k + 1])), JITTER_FLOOR),
        )

    def objective(theta: np.ndarray):
        try:
            lml, grad = log_marginal_likelihood(unpack(theta), X, y_int, with_grad=True)
        except GpFitError:
            return np.inf, np.zeros_like(theta)
        return -lml, -grad

    starts = [np.log(np.r_[np.full(k, 0.5), 1.0, 1e-4])]
    for _ in range(max(0, n_restarts)):
        starts.append(np.array([rng.uniform(lo, hi) for lo, hi in log_bounds]))

    best_theta, best_val = None, np.inf
    for theta0 in starts:
        res = minimize(
            objective,
            np.clip(theta0, [b[0] for b in log_bounds], [b[1] for b in log_bounds]),
            jac=True,
            method="L-BFGS-B",
            bounds=log_bounds,
            options={"maxiter": 80},
        )
        if res.fun < best_val:
            best_theta, best_val = res.x, float(res.fun)
    if best_theta is None:
        raise GpFitError("all hyperparameter fitting restarts failed")
    params = unpack(best_theta)
    return GpPosterior(X, y, params, y_mean=y_mean, y_std=y_std, log_marginal=-best_val)
