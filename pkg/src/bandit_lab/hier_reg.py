"""Posterior of the shared parameter in a three-level Gaussian regression.

Generative model, all variances known::

    theta0          ~ N(mu0, inv(Lambda0))
    theta_t | theta0 ~ N(theta0, Sigma)                 t = 1..T
    y_t | theta_t   ~ N(X_t theta_t, sigma2 I)

Integrating out theta_t gives y_t | theta0 ~ N(X_t theta0, sigma2 I + X_t Sigma X_t'),
so each task adds X_t' inv(sigma2 I + X_t Sigma X_t') X_t to the precision of
theta0. ``posterior_direct`` works with that N x N matrix; ``posterior_woodbury``
rewrites it with S_t = X_t'X_t, c_t = X_t'y_t as

    P_t = S_t / sigma2 - (S_t / sigma2) inv(inv(Sigma) + S_t / sigma2) (S_t / sigma2)

which only needs K x K solves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DataError, ParameterDomainError


class ConditioningError(ParameterDomainError):
    """A matrix that must be inverted is numerically singular."""


@dataclass(frozen=True, eq=False)
class HierPrior:
    mu0: np.ndarray
    Lambda0: np.ndarray

    def __post_init__(self) -> None:
        mu0 = np.asarray(self.mu0, dtype=float)
        lam = np.asarray(self.Lambda0, dtype=float)
        if mu0.ndim != 1 or lam.shape != (mu0.size, mu0.size):
            raise ParameterDomainError("Lambda0 must be K x K for a length-K mu0")
        _check_spd(lam, "Lambda0")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "Lambda0", lam)

    @property
    def K(self) -> int:
        return self.mu0.size


@dataclass(frozen=True, eq=False)
class TaskData:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.size or y.size < 1:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True, eq=False)
class HierPosterior:
    mu: np.ndarray
    Lambda: np.ndarray

    @property
    def covariance(self) -> np.ndarray:
        return linalg.cho_solve(linalg.cho_factor(self.Lambda), np.eye(self.mu.size))


def _check_spd(m: np.ndarray, name: str) -> None:
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ParameterDomainError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(m).min() <= 0:
        raise ParameterDomainError(f"{name} must be positive definite")


def _check_inputs(prior: HierPrior, Sigma: np.ndarray, sigma2: float, tasks: Sequence[TaskData]) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    K = prior.K
    if Sigma.shape != (K, K):
        raise ParameterDomainError(f"Sigma must be {K} x {K}")
    _check_spd(Sigma, "Sigma")
    if not sigma2 > 0:
        raise ParameterDomainError(f"sigma2 must be > 0, got {sigma2}")
    for task in tasks:
        if task.X.shape[1] != K:
            raise DataError(f"task has {task.X.shape[1]} features, expected {K}")
    return Sigma


def _finish(info: np.ndarray, lam: np.ndarray) -> HierPosterior:
    lam = 0.5 * (lam + lam.T)
    mu = linalg.cho_solve(linalg.cho_factor(lam), info)
    return HierPosterior(mu, lam)


def direct_contribution(task: TaskData, Sigma: np.ndarray, sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    """(precision increment, information increment) of one task via the N x N marginal covariance."""
    X = task.X
    cov = sigma2 * np.eye(X.shape[0]) + X @ Sigma @ X.T
    try:
        factor = linalg.cho_factor(cov)
    except linalg.LinAlgError as exc:
        raise ConditioningError("marginal covariance of y is not positive definite") from exc
    return X.T @ linalg.cho_solve(factor, X), X.T @ linalg.cho_solve(factor, task.y)


def woodbury_contribution(task: TaskData, Sigma_inv: np.ndarray, sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    """Same increments as ``direct_contribution`` using only K x K solves."""
    S = task.X.T @ task.X / sigma2
    c = task.X.T @ task.y / sigma2
    try:
        factor = linalg.cho_factor(Sigma_inv + S)
    except linalg.LinAlgError as exc:
        raise ConditioningError("inv(Sigma) + S / sigma2 is not positive definite") from exc
    return S - S @ linalg.cho_solve(factor, S), c - S @ linalg.cho_solve(factor, c)


def posterior_direct(prior: HierPrior, Sigma, sigma2: float, tasks: Sequence[TaskData]) -> HierPosterior:
    Sigma = _check_inputs(prior, Sigma, sigma2, tasks)
    lam = prior.Lambda0.copy()
    info = prior.Lambda0 @ prior.mu0
    for task in tasks:
        d_lam, d_info = direct_contribution(task, Sigma, sigma2)
        lam += d_lam
        info += d_info
    if not tasks:
        return HierPosterior(prior.mu0.copy(), prior.Lambda0.copy())
    return _finish(info, lam)


def posterior_woodbury(prior: HierPrior, Sigma, sigma2: float, tasks: Sequence[TaskData]) -> HierPosterior:
    Sigma = _check_inputs(prior, Sigma, sigma2, tasks)
    if not tasks:
        return HierPosterior(prior.mu0.copy(), prior.Lambda0.copy())
    if np.linalg.cond(Sigma) > 1e12:
        raise ConditioningError(f"Sigma is numerically singular (condition number {np.linalg.cond(Sigma):.3g})")
    Sigma_inv = linalg.cho_solve(linalg.cho_factor(Sigma), np.eye(prior.K))
    lam = prior.Lambda0.copy()
    info = prior.Lambda0 @ prior.mu0
    for task in tasks:
        d_lam, d_info = woodbury_contribution(task, Sigma_inv, sigma2)
        lam += d_lam
        info += d_info
    return _finish(info, lam)


def posterior_sequential(prior: HierPrior, Sigma, sigma2: float, tasks: Sequence[TaskData]) -> list[HierPosterior]:
    """Posterior after each task, updating (mu, Lambda) from the previous posterior only."""
    Sigma = _check_inputs(prior, Sigma, sigma2, tasks)
    mu, lam = prior.mu0.copy(), prior.Lambda0.copy()
    out = []
    for task in tasks:
        d_lam, d_info = direct_contribution(task, Sigma, sigma2)
        post = _finish(lam @ mu + d_info, lam + d_lam)
        mu, lam = post.mu, post.Lambda
        out.append(post)
    return out
