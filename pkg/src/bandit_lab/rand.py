"""Seedable, splittable random streams and the samplers built on them.

Every stream is identified by ``(root_seed, path)``. The underlying bits come
from a PCG64 generator seeded by ``numpy.random.SeedSequence(root_seed,
spawn_key=path)``, so two streams with the same identity produce the same
sequence in any process, and streams with different paths are seeded from
distinct hashed states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numba
import numpy as np

from .errors import DegeneratePriorError, ParameterDomainError, UndefinedMomentError

_TINY = np.finfo(float).tiny
_U64 = 2**64
_BLOCK = 4096


class _DrawBuffer:
    """Pre-drawn normals and uniforms consumed by the compiled Gamma sampler."""

    def __init__(self) -> None:
        self.z = np.empty(0)
        self.u = np.empty(0)
        self.pos = np.zeros(2, dtype=np.int64)

    def refill(self, gen: np.random.Generator, size: int) -> None:
        self.z = gen.standard_normal(size)
        self.u = gen.random(size)
        self.pos[:] = 0


@dataclass(frozen=True)
class RngStream:
    """A single-owner random stream. Do not share one across concurrent tasks."""

    root_seed: int
    path: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)
    _buffer: _DrawBuffer = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.root_seed < _U64:
            raise ParameterDomainError(f"root_seed must be a 64-bit unsigned integer, got {self.root_seed}")
        if any(not 0 <= i < _U64 for i in self.path):
            raise ParameterDomainError(f"path indices must be 64-bit unsigned integers, got {self.path}")
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))
        seq = np.random.SeedSequence(self.root_seed, spawn_key=self.path)
        object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(seq)))
        object.__setattr__(self, "_buffer", _DrawBuffer())

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def derive(self, index: int) -> "RngStream":
        return derive_stream(self, index)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def integers(self, high: int) -> int:
        return int(self._gen.integers(high))


def derive_stream(root: RngStream, index: int) -> RngStream:
    """Child stream at ``root.path + (index,)``; independent of how much ``root`` was consumed."""
    return RngStream(root.root_seed, root.path + (int(index),))


# --------------------------------------------------------------------------
# Parameter types


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ParameterDomainError(f"parameter must be finite, got {v}")


@dataclass(frozen=True)
class GaussianParams:
    mean: float
    variance: float

    def __post_init__(self) -> None:
        _check_finite(self.mean, self.variance)
        if self.variance < 0:
            raise ParameterDomainError(f"variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class GammaParams:
    """Gamma distribution with shape ``shape`` and rate ``rate`` (mean shape/rate)."""

    shape: float
    rate: float

    def __post_init__(self) -> None:
        _check_finite(self.shape, self.rate)
        if self.shape <= 0 or self.rate <= 0:
            raise ParameterDomainError(f"Gamma needs shape > 0 and rate > 0, got ({self.shape}, {self.rate})")


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self) -> None:
        _check_finite(self.a, self.b)
        if self.a <= 0 or self.b <= 0:
            raise ParameterDomainError(f"Beta needs a > 0 and b > 0, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class BernoulliParams:
    p: float

    def __post_init__(self) -> None:
        _check_finite(self.p)
        if not 0.0 <= self.p <= 1.0:
            raise ParameterDomainError(f"Bernoulli p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class NormalGammaParams:
    """Joint prior over (mean, precision): precision ~ Gam(alpha0, beta0), mean ~ N(mu0, 1/(kappa0 * precision)).

    ``kappa0 == 0`` or ``beta0 == 0`` is allowed here so that the degenerate
    frequentist-style priors can be represented; samplers reject them.
    """

    mu0: float
    kappa0: float
    alpha0: float
    beta0: float

    def __post_init__(self) -> None:
        _check_finite(self.mu0, self.kappa0, self.alpha0, self.beta0)
        if self.kappa0 < 0 or self.alpha0 <= 0 or self.beta0 < 0:
            raise ParameterDomainError(
                f"NormalGamma needs kappa0 >= 0, alpha0 > 0, beta0 >= 0, got "
                f"({self.mu0}, {self.kappa0}, {self.alpha0}, {self.beta0})"
            )


Distribution = Union[GaussianParams, GammaParams, BetaParams, BernoulliParams]


# --------------------------------------------------------------------------
# Vectorized samplers


@numba.njit(cache=True)
def _gamma_kernel(shape, out, z, u, pos):
    """Marsaglia-Tsang over ``shape`` reading normals ``z`` and uniforms ``u`` from ``pos``.

    Returns False without advancing ``pos`` if a buffer runs dry.
    """
    iz, iu = pos[0], pos[1]
    nz, nu = z.size, u.size
    for i in range(shape.size):
        a = shape[i]
        boost = a < 1.0
        if boost:
            a += 1.0
        d = a - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            if iz >= nz or iu + 1 >= nu:
                return False
            x = z[iz]
            iz += 1
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            w = u[iu]
            iu += 1
            if w == 0.0 or math.log(w) < 0.5 * x * x + d - d * v + d * math.log(v):
                break
        g = d * v
        if boost:
            w = u[iu]
            iu += 1
            g = 0.0 if w == 0.0 else g * math.exp(math.log(w) / shape[i])
        out[i] = max(g, _TINY)
    pos[0] = iz
    pos[1] = iu
    return True


def standard_gamma(shape, rng: RngStream) -> np.ndarray:
    """Gamma(shape, 1) draws by Marsaglia-Tsang rejection.

    Shapes below one are boosted: draw Gamma(shape + 1) and multiply by
    U**(1/shape). Results are floored at the smallest normal double so that
    reciprocals stay finite for vanishing shapes. Shapes must be positive;
    callers validate.
    """
    shape = np.asarray(shape, dtype=float)
    flat = np.ascontiguousarray(shape.ravel())
    out = np.empty(flat.size)
    buf = rng._buffer
    while not _gamma_kernel(flat, out, buf.z, buf.u, buf.pos):
        buf.refill(rng.generator, max(_BLOCK, 4 * flat.size))
    return out.reshape(shape.shape)


def gamma_variates(shape, rate, rng: RngStream) -> np.ndarray:
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(~(shape > 0)) or np.any(~(rate > 0)):
        raise ParameterDomainError("Gamma needs shape > 0 and rate > 0")
    shape, rate = np.broadcast_arrays(shape, rate)
    out = standard_gamma(shape, rng) / rate
    if not np.all(np.isfinite(out)):
        raise ParameterDomainError("Gamma draw overflowed; rate is too small for the shape")
    return np.maximum(out, _TINY)


def normal_variates(mean, variance, rng: RngStream) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(~(variance >= 0)):
        raise ParameterDomainError("variance must be >= 0")
    mean, variance = np.broadcast_arrays(mean, variance)
    z = rng.standard_normal(mean.shape)
    return mean + np.sqrt(variance) * z


def beta_variates(a, b, rng: RngStream) -> np.ndarray:
    """Beta(a, b) as Ga / (Ga + Gb) with independent unit-rate Gamma draws."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise ParameterDomainError("Beta needs a > 0 and b > 0")
    a, b = np.broadcast_arrays(a, b)
    ga = standard_gamma(a, rng)
    gb = standard_gamma(b, rng)
    return ga / (ga + gb)


def bernoulli_variates(p, rng: RngStream) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise ParameterDomainError("Bernoulli p must lie in [0, 1]")
    return (rng.uniform(p.shape) < p).astype(float)


def sample(dist: Distribution, rng: RngStream) -> float:
    """One draw from ``dist``."""
    if isinstance(dist, GaussianParams):
        return float(normal_variates(dist.mean, dist.variance, rng))
    if isinstance(dist, GammaParams):
        return float(gamma_variates(dist.shape, dist.rate, rng))
    if isinstance(dist, BetaParams):
        return float(beta_variates(dist.a, dist.b, rng))
    if isinstance(dist, BernoulliParams):
        return float(bernoulli_variates(dist.p, rng))
    raise TypeError(f"unsupported distribution {type(dist).__name__}")


def sample_normal_gamma(ng: NormalGammaParams, rng: RngStream) -> tuple[float, float]:
    """Draw (mean, precision): precision ~ Gam(alpha0, beta0), then mean ~ N(mu0, 1/(kappa0 * precision))."""
    if ng.kappa0 <= 0 or ng.beta0 <= 0:
        raise DegeneratePriorError(f"cannot sample from a degenerate prior (kappa0={ng.kappa0}, beta0={ng.beta0})")
    lam = float(gamma_variates(ng.alpha0, ng.beta0, rng))
    mu = float(normal_variates(ng.mu0, 1.0 / (ng.kappa0 * lam), rng))
    return mu, lam


def inverse_gamma_mean(alpha: float, beta: float) -> float:
    """E[1/X] for X ~ Gam(alpha, beta), which is beta / (alpha - 1)."""
    if not alpha > 1:
        raise UndefinedMomentError(f"E[1/X] needs alpha > 1, got {alpha}")
    if not beta > 0:
        raise ParameterDomainError(f"rate must be > 0, got {beta}")
    return beta / (alpha - 1.0)
