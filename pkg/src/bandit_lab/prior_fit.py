"""Method-of-moments estimates of Normal-Gamma hyper-parameters.

Given samples of arm means and reward precisions drawn from an instance
prior, match their first two moments to a Normal-Gamma prior.

Two solutions are provided. ``exact`` solves the moment equations
E[lam] = alpha0 / beta0, Var[lam] = alpha0 / beta0**2 and
Var[mu] = beta0 / (kappa0 * (alpha0 - 1)). ``paper`` uses the closed forms
mu0 = m, beta0 = lam_bar / nu, alpha0 = beta0 / lam_bar,
kappa0 = beta0 / (alpha0 * v), kept for reproducing published settings;
they do not reproduce the sample moments. ``variance`` matches the mean
and variance of the sampled reward variances 1/lam to the Inverse-Gamma
law of 1/lam; it stays defined when the precision has a heavy right tail
(arms whose mean prior puts mass near 0 or 1), where ``exact`` has no
solution with alpha0 > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, ParameterDomainError, UndefinedMomentError
from .rand import NormalGammaParams

FIT_MODES = ("exact", "paper", "variance")


class DegenerateMomentsError(ParameterDomainError):
    """A sample variance is zero, so the moment equations have no solution."""


@dataclass(frozen=True)
class MomentSummary:
    mean_of_means: float
    var_of_means: float
    mean_of_precisions: float
    var_of_precisions: float
    sample_count: int
    mean_of_variances: float = math.nan
    var_of_variances: float = math.nan


def summarize(mean_samples: Sequence[float], precision_samples: Sequence[float]) -> MomentSummary:
    """Sample means and unbiased sample variances of both lists."""
    means = np.asarray(mean_samples, dtype=float)
    precisions = np.asarray(precision_samples, dtype=float)
    if means.size < 2 or precisions.size < 2:
        raise DataError("need at least two mean samples and two precision samples")
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(precisions))):
        raise DataError("samples must be finite")
    if np.any(precisions <= 0):
        raise ParameterDomainError("precision samples must be > 0")
    return MomentSummary(
        float(means.mean()),
        float(means.var(ddof=1)),
        float(precisions.mean()),
        float(precisions.var(ddof=1)),
        int(min(means.size, precisions.size)),
        float((1.0 / precisions).mean()),
        float((1.0 / precisions).var(ddof=1)),
    )


def fit_normal_gamma(summary: MomentSummary, mode: str = "exact") -> NormalGammaParams:
    if mode not in FIT_MODES:
        raise ParameterDomainError(f"unknown fit mode {mode!r}; expected one of {FIT_MODES}")
    v, lam, nu = summary.var_of_means, summary.mean_of_precisions, summary.var_of_precisions
    if mode == "variance":
        return _fit_from_variances(summary)
    if not (v > 0 and nu > 0):
        raise DegenerateMomentsError(f"moment fit needs positive sample variances, got v={v}, nu={nu}")
    beta0 = lam / nu
    if mode == "paper":
        alpha0 = beta0 / lam
        kappa0 = beta0 / (alpha0 * v)
    else:
        alpha0 = lam * lam / nu
        if not alpha0 > 1:
            raise UndefinedMomentError(
                f"fitted alpha0 = {alpha0:.6g} <= 1, so the mean prior has no finite variance to match"
            )
        kappa0 = beta0 / ((alpha0 - 1.0) * v)
    params = (summary.mean_of_means, kappa0, alpha0, beta0)
    if not all(math.isfinite(p) for p in params):
        raise DegenerateMomentsError(f"moment fit produced non-finite parameters {params}")
    return NormalGammaParams(*params)


def _fit_from_variances(summary: MomentSummary) -> NormalGammaParams:
    v, e, w = summary.var_of_means, summary.mean_of_variances, summary.var_of_variances
    if not (v > 0 and w > 0):
        raise DegenerateMomentsError(f"moment fit needs positive sample variances, got v={v}, var(1/lam)={w}")
    alpha0 = 2.0 + e * e / w
    beta0 = e * (alpha0 - 1.0)
    return NormalGammaParams(summary.mean_of_means, e / v, alpha0, beta0)


def fit_env_prior(env, rng, samples: int = 10_000, mode: str = "variance") -> tuple[NormalGammaParams, ...]:
    """Per-arm Normal-Gamma prior fitted to ``samples`` instances drawn from ``env``'s prior."""
    from .envs import sample_instance

    if samples < 2:
        raise DataError("need at least two prior samples")
    draws = [sample_instance(env, rng) for _ in range(samples)]
    mu = np.array([d.mu for d in draws])
    sigma2 = np.array([d.sigma2 for d in draws])
    if np.any(sigma2 <= 0):
        raise DataError("sampled reward variances must be > 0 to form precisions")
    return tuple(fit_normal_gamma(summarize(mu[:, i], 1.0 / sigma2[:, i]), mode) for i in range(env.K))
