"""Bayesian bandit environments.

An environment spec is a prior over bandit instances plus a reward family.
Sampling an instance draws the arm means (and, for Gaussian-Gamma priors,
the precisions); rewards are then drawn per pull. Arms are numbered 1..K in
every public function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ParameterDomainError
from .rand import (
    BetaParams,
    NormalGammaParams,
    RngStream,
    bernoulli_variates,
    beta_variates,
    gamma_variates,
    normal_variates,
)

MU_CLAMP = 1e-9


def _readonly(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ParameterDomainError(f"{name} must be a vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """Realized arm means and reward variances."""

    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self) -> None:
        mu = _readonly(self.mu, "mu")
        sigma2 = _readonly(self.sigma2, "sigma2")
        if mu.size < 1 or mu.shape != sigma2.shape:
            raise ParameterDomainError("mu and sigma2 must be equal-length vectors with K >= 1")
        if np.any(sigma2 < 0):
            raise ParameterDomainError("reward variances must be >= 0")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def K(self) -> int:
        return self.mu.size


@dataclass(frozen=True, eq=False)
class GaussianKnownVar:
    """mu_i ~ N(prior_mean_i, prior_var_i), rewards N(mu_i, sigma2_i) with sigma2 known."""

    prior_mean: np.ndarray
    prior_var: np.ndarray
    sigma2: np.ndarray
    name: str = "gaussian_known"

    def __post_init__(self) -> None:
        for attr in ("prior_mean", "prior_var", "sigma2"):
            object.__setattr__(self, attr, _readonly(getattr(self, attr), attr))
        if not (self.prior_mean.size == self.prior_var.size == self.sigma2.size >= 1):
            raise ParameterDomainError("per-arm parameter lists must all have length K >= 1")
        if np.any(self.prior_var < 0) or np.any(self.sigma2 < 0):
            raise ParameterDomainError("variances must be >= 0")

    @property
    def K(self) -> int:
        return self.prior_mean.size

    def sample_means(self, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
        return normal_variates(self.prior_mean, self.prior_var, rng), self.sigma2.copy()

    def draw_rewards(self, mu: float, sigma2: float, size: int, rng: RngStream) -> np.ndarray:
        return mu + np.sqrt(sigma2) * rng.standard_normal(size)


@dataclass(frozen=True, eq=False)
class GaussianNG:
    """(mu_i, 1/sigma2_i) ~ NG(mu0_i, kappa0_i, alpha0_i, beta0_i), rewards N(mu_i, sigma2_i)."""

    priors: tuple[NormalGammaParams, ...]
    name: str = "gaussian"

    def __post_init__(self) -> None:
        object.__setattr__(self, "priors", tuple(self.priors))
        if len(self.priors) < 1:
            raise ParameterDomainError("need K >= 1 arm priors")
        if any(p.kappa0 <= 0 or p.beta0 <= 0 for p in self.priors):
            raise ParameterDomainError("environment priors need kappa0 > 0 and beta0 > 0")

    @property
    def K(self) -> int:
        return len(self.priors)

    def prior_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.array([getattr(p, f) for p in self.priors]) for f in ("mu0", "kappa0", "alpha0", "beta0"))

    def sample_means(self, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
        mu0, kappa0, alpha0, beta0 = self.prior_arrays()
        lam = gamma_variates(alpha0, beta0, rng)
        mu = normal_variates(mu0, 1.0 / (kappa0 * lam), rng)
        return mu, 1.0 / lam

    def draw_rewards(self, mu: float, sigma2: float, size: int, rng: RngStream) -> np.ndarray:
        return mu + np.sqrt(sigma2) * rng.standard_normal(size)


@dataclass(frozen=True, eq=False)
class BernoulliBeta:
    """mu_i ~ Beta(a_i, b_i), rewards Bernoulli(mu_i)."""

    priors: tuple[BetaParams, ...]
    name: str = "bernoulli"

    def __post_init__(self) -> None:
        object.__setattr__(self, "priors", tuple(self.priors))
        if len(self.priors) < 1:
            raise ParameterDomainError("need K >= 1 arm priors")

    @property
    def K(self) -> int:
        return len(self.priors)

    def sample_means(self, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
        mu = beta_variates([p.a for p in self.priors], [p.b for p in self.priors], rng)
        return mu, mu * (1.0 - mu)

    def draw_rewards(self, mu: float, sigma2: float, size: int, rng: RngStream) -> np.ndarray:
        return bernoulli_variates(np.full(size, mu), rng)


@dataclass(frozen=True, eq=False)
class BetaScaled:
    """mu_i ~ Beta(a_i, b_i), rewards Beta(s * mu_i, s * (1 - mu_i))."""

    priors: tuple[BetaParams, ...]
    scale: float = 10.0
    name: str = "beta"

    def __post_init__(self) -> None:
        object.__setattr__(self, "priors", tuple(self.priors))
        if len(self.priors) < 1:
            raise ParameterDomainError("need K >= 1 arm priors")
        if not self.scale > 0:
            raise ParameterDomainError(f"scale must be > 0, got {self.scale}")

    @property
    def K(self) -> int:
        return len(self.priors)

    def sample_means(self, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
        mu = beta_variates([p.a for p in self.priors], [p.b for p in self.priors], rng)
        return mu, mu * (1.0 - mu) / (self.scale + 1.0)

    def draw_rewards(self, mu: float, sigma2: float, size: int, rng: RngStream) -> np.ndarray:
        m = min(max(mu, MU_CLAMP), 1.0 - MU_CLAMP)
        s = self.scale
        return beta_variates(np.full(size, s * m), np.full(size, s * (1.0 - m)), rng)


EnvSpec = Union[GaussianKnownVar, GaussianNG, BernoulliBeta, BetaScaled]

ENV_KINDS = ("bernoulli", "beta", "gaussian")


def make_env_spec(kind_name: str, K: int) -> EnvSpec:
    """The three experiment environments; arm i has prior mean i / (K + 1)."""
    if K < 1:
        raise ParameterDomainError(f"K must be >= 1, got {K}")
    if kind_name == "bernoulli":
        return BernoulliBeta(tuple(BetaParams(i, K + 1 - i) for i in range(1, K + 1)))
    if kind_name == "beta":
        return BetaScaled(tuple(BetaParams(i, K + 1 - i) for i in range(1, K + 1)), scale=10.0)
    if kind_name == "gaussian":
        return GaussianNG(tuple(NormalGammaParams(i / (K + 1), K, 4.0, 1.0) for i in range(1, K + 1)))
    raise ParameterDomainError(f"unknown environment kind {kind_name!r}; expected one of {ENV_KINDS}")


def gaussian_known_spec(
    K: int,
    prior_var: float | Sequence[float] = 1.0,
    sigma2: float | Sequence[float] = 1.0,
    prior_mean: Sequence[float] | None = None,
) -> GaussianKnownVar:
    """Known-variance Gaussian environment; prior means default to i / (K + 1)."""
    if K < 1:
        raise ParameterDomainError(f"K must be >= 1, got {K}")
    if prior_mean is None:
        prior_mean = np.arange(1, K + 1) / (K + 1)
    arrays = []
    for name, value in (("prior_mean", prior_mean), ("prior_var", prior_var), ("sigma2", sigma2)):
        arr = np.asarray(value, float)
        if arr.ndim > 1 or arr.size not in (1, K):
            raise ParameterDomainError(f"{name} needs 1 or K = {K} entries, got {arr.size}")
        arrays.append(np.broadcast_to(arr, (K,)))
    return GaussianKnownVar(*arrays)


def sample_instance(spec: EnvSpec, rng: RngStream) -> BanditInstance:
    mu, sigma2 = spec.sample_means(rng)
    return BanditInstance(mu, sigma2)


def _arm_index(arm: int, K: int) -> int:
    if not 1 <= arm <= K:
        raise IndexError(f"arm {arm} out of range 1..{K}")
    return arm - 1


def sample_reward(instance: BanditInstance, spec: EnvSpec, arm: int, rng: RngStream) -> float:
    i = _arm_index(arm, instance.K)
    return float(spec.draw_rewards(float(instance.mu[i]), float(instance.sigma2[i]), 1, rng)[0])


def instance_optimum(instance: BanditInstance) -> tuple[int, float]:
    """Best arm (lowest index on ties) and its mean."""
    i = int(np.argmax(instance.mu))
    return i + 1, float(instance.mu[i])


class RewardTape:
    """Reward source for one run in which arm i's j-th pull always gets the same reward.

    Each arm reads from its own child stream ``rng.derive(i)`` in blocks, so the
    reward sequences do not depend on which policy is pulling.
    """

    def __init__(self, instance: BanditInstance, spec: EnvSpec, rng: RngStream, block: int = 256):
        self.instance = instance
        self.spec = spec
        self._rng = rng
        self._block = block
        K = instance.K
        self._streams: list[RngStream | None] = [None] * K
        self._buf: list[np.ndarray] = [np.empty(0)] * K
        self._pos = [0] * K

    def pull(self, arm: int) -> float:
        i = _arm_index(arm, self.instance.K)
        pos = self._pos[i]
        buf = self._buf[i]
        if pos == buf.size:
            stream = self._streams[i]
            if stream is None:
                stream = self._streams[i] = self._rng.derive(i + 1)
            buf = self._buf[i] = self.spec.draw_rewards(
                float(self.instance.mu[i]), float(self.instance.sigma2[i]), self._block, stream
            )
            pos = 0
        self._pos[i] = pos + 1
        return float(buf[pos])
