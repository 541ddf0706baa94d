"""Bandit agents behind one select/observe interface.

Thompson sampling agents:

* ``gaussian_ts``  - Gaussian prior on each mean, known reward variances.
* ``varts``        - Normal-Gamma prior on each (mean, precision) pair.
* ``ts14``         - Normal-Gamma sampling with the flat prior kappa0 = beta0 = 0
                     and shape ``alpha_param``; two forced pulls per arm.
* ``ts20``         - ``varts`` with (mu0, kappa0, alpha0, beta0) = (0, 0, 0.5, 0.5);
                     one forced pull per arm.
* ``bernoulli_ts`` - Beta(1, 1) prior; rewards are clipped to [0, 1] and
                     rounded to {0, 1} by a Bernoulli draw.

Index agents: ``ucb1``, ``ucb1_tuned`` and ``ucb_v``.

Arms are numbered 1..K at the interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DataError, DegeneratePriorError, ParameterDomainError
from .rand import GaussianParams, NormalGammaParams, RngStream, standard_gamma

POLICY_KINDS = ("gaussian_ts", "varts", "ts14", "ts20", "bernoulli_ts", "ucb1", "ucb1_tuned", "ucb_v")
UCB_KINDS = ("ucb1", "ucb1_tuned", "ucb_v")

# substituted for a zero Gamma rate when sampling a precision
BETA_FLOOR = 1e-12

TS20_PRIOR = NormalGammaParams(0.0, 0.0, 0.5, 0.5)


@dataclass
class ArmStats:
    """Count, running mean and running sum of squared deviations of one arm's rewards."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @classmethod
    def from_samples(cls, xs: Sequence[float]) -> "ArmStats":
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            return cls()
        mean = float(xs.mean())
        return cls(int(xs.size), mean, float(np.sum((xs - mean) ** 2)))


# --------------------------------------------------------------------------
# Conjugate posteriors


def gaussian_ts_posterior(prior: GaussianParams, known_sigma2: float, stats: ArmStats) -> tuple[float, float]:
    """Posterior (mean, variance) of an arm mean under a Gaussian prior and known reward variance."""
    if not known_sigma2 > 0:
        raise ParameterDomainError(f"known reward variance must be > 0, got {known_sigma2}")
    if prior.variance == 0:
        return prior.mean, 0.0
    var_t = 1.0 / (1.0 / prior.variance + stats.count / known_sigma2)
    mu_hat = var_t * (prior.mean / prior.variance + stats.count * stats.mean / known_sigma2)
    return mu_hat, var_t


def varts_posterior(prior: NormalGammaParams, stats: ArmStats) -> tuple[float, float, float, float]:
    """Normal-Gamma posterior (mu_hat, kappa, alpha, beta) from an arm's sufficient statistics."""
    k0, n = prior.kappa0, stats.count
    if k0 == 0 and n == 0:
        raise DegeneratePriorError("posterior mean is undefined with kappa0 = 0 and no observations")
    kappa = k0 + n
    alpha = prior.alpha0 + n / 2.0
    dev = stats.mean - prior.mu0
    beta = prior.beta0 + stats.m2 / 2.0 + k0 * n * dev * dev / (2.0 * kappa)
    mu_hat = (k0 * prior.mu0 + n * stats.mean) / kappa
    return mu_hat, kappa, alpha, beta


def _ucb_indices(kind: str, counts: np.ndarray, means: np.ndarray, m2: np.ndarray, t: int, b: float, zeta: float):
    counts = np.asarray(counts, dtype=float)
    out = np.full(counts.shape, np.inf)
    seen = counts > 0
    n = counts[seen]
    mean = np.asarray(means, dtype=float)[seen]
    log_t = math.log(t)
    if kind == "ucb1":
        out[seen] = mean + np.sqrt(2.0 * log_t / n)
    elif kind == "ucb1_tuned":
        v = np.asarray(m2, dtype=float)[seen] / n
        out[seen] = mean + np.sqrt(log_t / n * np.minimum(0.25, v + np.sqrt(2.0 * log_t / n)))
    elif kind == "ucb_v":
        v = np.asarray(m2, dtype=float)[seen] / n
        out[seen] = mean + np.sqrt(2.0 * v * zeta * log_t / n) + 3.0 * b * zeta * log_t / n
    else:
        raise ParameterDomainError(f"not an index policy: {kind!r}")
    return out


def ucb_index(kind: str, stats: ArmStats, t: int, b: float = 1.0, zeta: float = 1.2) -> float:
    """Upper confidence index of one arm in round t; +inf for an unpulled arm."""
    if t < 1:
        raise ParameterDomainError(f"round must be >= 1, got {t}")
    return float(_ucb_indices(kind, [stats.count], [stats.mean], [stats.m2], t, b, zeta)[0])


def argmax_random_tiebreak(values: np.ndarray, rng: RngStream) -> int:
    """0-based argmax; ties broken uniformly at random (draws from rng only on a tie)."""
    i = int(np.argmax(values))
    if np.count_nonzero(values == values[i]) == 1:
        return i
    best = np.flatnonzero(values == values[i])
    return int(best[rng.integers(best.size)])


# --------------------------------------------------------------------------
# Specs


Scalars = Union[float, Sequence[float]]


@dataclass(frozen=True)
class PolicySpec:
    """Which agent to run and its parameters.

    Per-arm parameters may be scalars (shared by all arms) or length-K tuples.
    ``ng_prior`` is required for ``varts``.
    """

    kind: str
    prior_mean: Scalars = 0.0
    prior_var: Scalars = 1.0
    sigma2: Scalars = 1.0
    ng_prior: Union[NormalGammaParams, tuple[NormalGammaParams, ...], None] = None
    alpha_param: float = 0.5
    ucb_b: float = 1.0
    ucb_zeta: float = 1.2
    label: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ParameterDomainError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        for attr in ("prior_mean", "prior_var", "sigma2"):
            value = getattr(self, attr)
            if not np.isscalar(value):
                object.__setattr__(self, attr, tuple(float(v) for v in value))
        if isinstance(self.ng_prior, list):
            object.__setattr__(self, "ng_prior", tuple(self.ng_prior))
        if self.kind == "varts" and self.ng_prior is None:
            raise ParameterDomainError("varts needs a Normal-Gamma prior")
        if self.kind == "ts14" and not self.alpha_param > 0:
            raise ParameterDomainError(f"ts14 alpha_param must be > 0, got {self.alpha_param}")
        if self.kind == "ucb_v" and not (self.ucb_b > 0 and self.ucb_zeta > 0):
            raise ParameterDomainError("ucb_v needs b > 0 and zeta > 0")

    @property
    def name(self) -> str:
        return self.label or self.kind


def _per_arm(value, K: int, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(K, float(arr))
    if arr.shape != (K,):
        raise ParameterDomainError(f"{what} has {arr.size} entries for {K} arms")
    return arr.copy()


def _ng_per_arm(prior, K: int) -> list[NormalGammaParams]:
    if isinstance(prior, NormalGammaParams):
        return [prior] * K
    prior = list(prior)
    if len(prior) != K:
        raise ParameterDomainError(f"Normal-Gamma prior has {len(prior)} entries for {K} arms")
    return prior


# --------------------------------------------------------------------------
# States


class PolicyState:
    """Per-arm statistics plus the round counter; subclasses add posterior caches."""

    min_pulls: np.ndarray

    def __init__(self, spec: PolicySpec, K: int, horizon: int | None = None):
        if K < 1:
            raise ParameterDomainError(f"K must be >= 1, got {K}")
        self.spec = spec
        self.K = K
        self.horizon = horizon
        self.t = 1
        self.counts = np.zeros(K, dtype=np.int64)
        self.means = np.zeros(K)
        self.m2 = np.zeros(K)
        self.min_pulls = np.zeros(K, dtype=np.int64)

    def stats(self, arm: int) -> ArmStats:
        i = self._index(arm)
        return ArmStats(int(self.counts[i]), float(self.means[i]), float(self.m2[i]))

    def _index(self, arm: int) -> int:
        if not 1 <= arm <= self.K:
            raise IndexError(f"arm {arm} out of range 1..{self.K}")
        return arm - 1

    def _forced_arm(self) -> int | None:
        short = self.counts < self.min_pulls
        if not short.any():
            return None
        deficit = np.where(short, self.counts, np.iinfo(np.int64).max)
        return int(np.argmin(deficit))

    def select(self, rng: RngStream) -> int:
        if self.K == 1:
            return 1
        i = self._forced_arm()
        if i is None:
            i = argmax_random_tiebreak(self.scores(rng), rng)
        return i + 1

    def scores(self, rng: RngStream) -> np.ndarray:
        raise NotImplementedError

    def observe(self, arm: int, reward: float, rng: RngStream | None = None) -> "PolicyState":
        i = self._index(arm)
        if not math.isfinite(reward):
            raise DataError(f"reward must be finite, got {reward}")
        n = int(self.counts[i]) + 1
        mean = float(self.means[i])
        delta = reward - mean
        mean += delta / n
        self.counts[i] = n
        self.means[i] = mean
        self.m2[i] += delta * (reward - mean)
        self._refresh(i, reward, rng)
        self.t += 1
        return self

    def _refresh(self, i: int, reward: float, rng: RngStream | None) -> None:
        pass


class GaussianTSState(PolicyState):
    def __init__(self, spec: PolicySpec, K: int, horizon: int | None = None):
        super().__init__(spec, K, horizon)
        mean = _per_arm(spec.prior_mean, K, "prior_mean")
        var = _per_arm(spec.prior_var, K, "prior_var")
        self.sigma2 = _per_arm(spec.sigma2, K, "sigma2")
        if np.any(var < 0):
            raise ParameterDomainError("prior variances must be >= 0")
        if np.any(~(self.sigma2 > 0)):
            raise ParameterDomainError("known reward variances must be > 0")
        self.priors = [GaussianParams(m, v) for m, v in zip(mean, var)]
        self.mu_hat = mean.copy()
        self.var = var.copy()

    def _refresh(self, i, reward, rng):
        self.mu_hat[i], self.var[i] = gaussian_ts_posterior(self.priors[i], self.sigma2[i], self.stats(i + 1))

    def scores(self, rng):
        return self.mu_hat + np.sqrt(self.var) * rng.standard_normal(self.K)


class NormalGammaTSState(PolicyState):
    """Shared by varts, ts14 and ts20; arms whose prior has kappa0 = 0 are pulled once up front."""

    def __init__(self, spec: PolicySpec, K: int, horizon: int | None = None):
        super().__init__(spec, K, horizon)
        if spec.kind == "ts20":
            self.priors = [TS20_PRIOR] * K
        elif spec.kind == "ts14":
            self.priors = [NormalGammaParams(0.0, 0.0, spec.alpha_param, 0.0)] * K
        else:
            self.priors = _ng_per_arm(spec.ng_prior, K)
        kappa0 = np.array([p.kappa0 for p in self.priors])
        self.min_pulls = np.where(kappa0 == 0, 2 if spec.kind == "ts14" else 1, 0).astype(np.int64)
        self.mu_hat = np.array([p.mu0 for p in self.priors])
        self.kappa = kappa0.copy()
        self.alpha = np.array([p.alpha0 for p in self.priors])
        self.beta = np.array([p.beta0 for p in self.priors])

    def _refresh(self, i, reward, rng):
        self.mu_hat[i], self.kappa[i], self.alpha[i], self.beta[i] = varts_posterior(self.priors[i], self.stats(i + 1))

    def scores(self, rng):
        beta = np.where(self.beta > 0, self.beta, BETA_FLOOR)
        lam = standard_gamma(self.alpha, rng) / beta
        return self.mu_hat + rng.standard_normal(self.K) / np.sqrt(self.kappa * lam)


class BernoulliTSState(PolicyState):
    def __init__(self, spec: PolicySpec, K: int, horizon: int | None = None):
        super().__init__(spec, K, horizon)
        self.successes = np.zeros(K, dtype=np.int64)
        self.failures = np.zeros(K, dtype=np.int64)

    def _refresh(self, i, reward, rng):
        p = min(max(reward, 0.0), 1.0)
        if p == 1.0:
            hit = True
        elif p == 0.0:
            hit = False
        else:
            if rng is None:
                raise DataError("bernoulli_ts needs a random stream to round a fractional reward")
            hit = rng.uniform() < p
        if hit:
            self.successes[i] += 1
        else:
            self.failures[i] += 1

    def scores(self, rng):
        # Beta(a, b) as Ga / (Ga + Gb), both Gamma vectors in one call
        g = standard_gamma(np.concatenate((1.0 + self.successes, 1.0 + self.failures)), rng)
        ga = g[: self.K]
        return ga / (ga + g[self.K :])


class UCBState(PolicyState):
    def __init__(self, spec: PolicySpec, K: int, horizon: int | None = None):
        super().__init__(spec, K, horizon)
        self.min_pulls = np.ones(K, dtype=np.int64)

    def scores(self, rng):
        s = self.spec
        return _ucb_indices(s.kind, self.counts, self.means, self.m2, self.t, s.ucb_b, s.ucb_zeta)


_STATES = {
    "gaussian_ts": GaussianTSState,
    "varts": NormalGammaTSState,
    "ts14": NormalGammaTSState,
    "ts20": NormalGammaTSState,
    "bernoulli_ts": BernoulliTSState,
    "ucb1": UCBState,
    "ucb1_tuned": UCBState,
    "ucb_v": UCBState,
}


def init_policy(spec: PolicySpec, K: int, horizon: int | None = None) -> PolicyState:
    return _STATES[spec.kind](spec, K, horizon)


def select_arm(state: PolicyState, rng: RngStream) -> int:
    return state.select(rng)


def observe(state: PolicyState, arm: int, reward: float, rng: RngStream | None = None) -> PolicyState:
    """Record a reward for ``arm``; ``rng`` is only consumed by Bernoulli rounding."""
    return state.observe(arm, reward, rng)
