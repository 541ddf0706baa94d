"""Closed-form Bayes regret upper bounds for Gaussian TS and VarTS.

Known variances (Gaussian prior N(mu0_i, s0_i) on arm means, reward variances s_i):

    R_n <= sum_i sqrt(2 s0_i / pi) n delta
           + sqrt(2 n) sqrt(sum_i s_i (log(1 + n s0_i / s_i) + s0_i / s_i) log(1 / delta))

Unknown variances (Normal-Gamma prior per arm, alpha0_i > 1):

    R_n <= C sqrt(n log(1 / delta)) + delta C sqrt(n K / (2 pi))
    C^2  = sum_i beta0_i / (alpha0_i - 1)
               * (2 / kappa0_i + 0.5 / (kappa0_i (alpha0_i - 1)) + 5 log(1 + n / kappa0_i))

``log(1 + x)`` is evaluated with ``log1p`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterDomainError, UndefinedMomentError
from .rand import NormalGammaParams


@dataclass(frozen=True)
class KnownVarianceInputs:
    horizon: int
    delta: float
    prior_var: Sequence[float]
    sigma2: Sequence[float]

    @property
    def K(self) -> int:
        return len(self.prior_var)


@dataclass(frozen=True)
class UnknownVarianceInputs:
    horizon: int
    delta: float
    priors: Sequence[NormalGammaParams]

    @property
    def K(self) -> int:
        return len(self.priors)


def _check_common(horizon: int, delta: float) -> None:
    if horizon < 1:
        raise ParameterDomainError(f"horizon must be >= 1, got {horizon}")
    if not 0 < delta <= 1:
        raise ParameterDomainError(f"delta must lie in (0, 1], got {delta}")


def bound_known_variance(inputs: KnownVarianceInputs) -> float:
    _check_common(inputs.horizon, inputs.delta)
    s0 = np.asarray(inputs.prior_var, dtype=float)
    s = np.asarray(inputs.sigma2, dtype=float)
    if s0.shape != s.shape or s0.ndim != 1 or s0.size < 1:
        raise ParameterDomainError("prior_var and sigma2 must be equal-length non-empty vectors")
    if np.any(~(s > 0)) or np.any(~(s0 >= 0)):
        raise ParameterDomainError("need sigma2 > 0 and prior_var >= 0 for every arm")
    n = inputs.horizon
    ratio = s0 / s
    tail = float(np.sum(np.sqrt(2.0 * s0 / math.pi))) * n * inputs.delta
    inner = float(np.sum(s * (np.log1p(n * ratio) + ratio)))
    return tail + math.sqrt(2.0 * n) * math.sqrt(inner * -math.log(inputs.delta))


def _check_ng(priors: Sequence[NormalGammaParams]) -> None:
    if len(priors) < 1:
        raise ParameterDomainError("need at least one arm prior")
    for p in priors:
        if not p.alpha0 > 1:
            raise UndefinedMomentError(f"the bound needs alpha0 > 1 for every arm, got {p.alpha0}")
        if not (p.kappa0 > 0 and p.beta0 > 0):
            raise ParameterDomainError(f"the bound needs kappa0 > 0 and beta0 > 0, got {p}")


def c_squared(priors: Sequence[NormalGammaParams], horizon: int) -> float:
    _check_ng(priors)
    total = 0.0
    for p in priors:
        a1 = p.alpha0 - 1.0
        total += p.beta0 / a1 * (2.0 / p.kappa0 + 0.5 / (p.kappa0 * a1) + 5.0 * math.log1p(horizon / p.kappa0))
    return total


def c_squared_regrouped(priors: Sequence[NormalGammaParams], horizon: int) -> float:
    """Same constant written as (4 b + b / (a - 1)) / (2 k (a - 1)) + 5 b log(1 + n / k) / (a - 1)."""
    _check_ng(priors)
    total = 0.0
    for p in priors:
        a1 = p.alpha0 - 1.0
        b, k = p.beta0, p.kappa0
        total += (4.0 * b + b / a1) / (2.0 * k * a1) + 5.0 * b * math.log1p(horizon / k) / a1
    return total


def bound_unknown_variance(inputs: UnknownVarianceInputs) -> tuple[float, float]:
    """Return (C, bound)."""
    _check_common(inputs.horizon, inputs.delta)
    n, K = inputs.horizon, inputs.K
    c = math.sqrt(c_squared(inputs.priors, n))
    bound = c * math.sqrt(n * -math.log(inputs.delta)) + inputs.delta * c * math.sqrt(n * K / (2.0 * math.pi))
    return c, bound


def lemma_sum_checks(n: int, a: float) -> tuple[float, float, float, float]:
    """Both sides of sum_{i<=n} 1/(i+a) <= log(1+n/a) and sum_{i<=n} 1/sqrt(i+a) <= 2(sqrt(n+a) - sqrt(a))."""
    if n < 1:
        raise ParameterDomainError(f"n must be >= 1, got {n}")
    if not a > 0:
        raise ParameterDomainError(f"a must be > 0, got {a}")
    i = np.arange(1, n + 1, dtype=float) + a
    lhs_sum = math.fsum(1.0 / i)
    lhs_root = math.fsum(1.0 / np.sqrt(i))
    rhs_log = math.log1p(n / a)
    # 2 n / (sqrt(n + a) + sqrt(a)) avoids cancellation for large a
    rhs_root = 2.0 * n / (math.sqrt(n + a) + math.sqrt(a))
    return lhs_sum, rhs_log, lhs_root, rhs_root
