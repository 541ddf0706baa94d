"""Monte-Carlo estimation of Bayes regret.

Run r of an experiment draws everything from ``derive(root, r)``: child 0
samples the instance, child 1 drives the agent, child 2 feeds per-arm reward
tapes. Because none of these depend on which policy is being run, every
policy faces the same instances and reward sequences (common random numbers),
and two identical policies produce identical curves.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .envs import BanditInstance, EnvSpec, RewardTape, sample_instance
from .errors import BanditLabError, DataError, ParameterDomainError
from .policies import PolicySpec, PolicyState, init_policy
from .rand import RngStream

log = logging.getLogger(__name__)

INSTANCE_STREAM, POLICY_STREAM, REWARD_STREAM = 0, 1, 2

PolicyFactory = Callable[[int, int], PolicyState]


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvSpec
    policies: tuple[PolicySpec, ...]
    horizon: int
    runs: int
    root_seed: int
    record_every: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "policies", tuple(self.policies))
        if self.horizon < 1 or self.runs < 1 or self.record_every < 1:
            raise ParameterDomainError("horizon, runs and record_every must all be >= 1")
        if not self.policies:
            raise ParameterDomainError("need at least one policy")


@dataclass(frozen=True, eq=False)
class RegretTrajectory:
    """Cumulative pseudo-regret after each round."""

    cumulative: np.ndarray


@dataclass(frozen=True, eq=False)
class AggregateCurve:
    rounds: np.ndarray
    mean_regret: np.ndarray
    stderr: np.ndarray
    runs: int

    def final(self) -> tuple[float, float]:
        return float(self.mean_regret[-1]), float(self.stderr[-1])


def recorded_rounds(horizon: int, record_every: int) -> np.ndarray:
    """1-based rounds kept in the output: multiples of record_every plus the last round."""
    rounds = np.arange(record_every, horizon + 1, record_every)
    if rounds.size == 0 or rounds[-1] != horizon:
        rounds = np.append(rounds, horizon)
    return rounds


def run_episode(
    policy: Union[PolicySpec, PolicyFactory],
    env: EnvSpec,
    horizon: int,
    rng: RngStream,
    instance: BanditInstance | None = None,
) -> RegretTrajectory:
    """Play one episode and return its cumulative pseudo-regret (true means, not realized rewards).

    ``policy`` may also be a factory ``(K, horizon) -> state`` for custom agents;
    ``instance`` overrides the draw from the environment prior.
    """
    if instance is None:
        instance = sample_instance(env, rng.derive(INSTANCE_STREAM))
    K = instance.K
    state = init_policy(policy, K, horizon) if isinstance(policy, PolicySpec) else policy(K, horizon)
    policy_rng = rng.derive(POLICY_STREAM)
    tape = RewardTape(instance, env, rng.derive(REWARD_STREAM))
    gaps = instance.mu.max() - instance.mu
    per_round = np.empty(horizon)
    t = 0
    try:
        for t in range(horizon):
            arm = state.select(policy_rng)
            reward = tape.pull(arm)
            state.observe(arm, reward, policy_rng)
            per_round[t] = gaps[arm - 1]
    except BanditLabError as exc:
        name = policy.name if isinstance(policy, PolicySpec) else getattr(policy, "__name__", "policy")
        raise type(exc)(f"{name}, stream path {rng.path}, round {t + 1}: {exc}") from exc
    return RegretTrajectory(np.cumsum(per_round))


class _RunningCurve:
    """Welford accumulator over trajectories, subsampled at fixed rounds."""

    def __init__(self, rounds: np.ndarray):
        self.rounds = rounds
        self.idx = rounds - 1
        self.n = 0
        self.mean = np.zeros(rounds.size)
        self.m2 = np.zeros(rounds.size)

    def add(self, cumulative: np.ndarray) -> None:
        x = cumulative[self.idx]
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def result(self) -> AggregateCurve:
        if self.n == 0:
            raise DataError("no trajectories to aggregate")
        if self.n == 1:
            stderr = np.zeros_like(self.mean)
        else:
            stderr = np.sqrt(np.maximum(self.m2, 0.0) / (self.n - 1) / self.n)
        return AggregateCurve(self.rounds.copy(), self.mean.copy(), stderr, self.n)


def aggregate(trajectories: Sequence[RegretTrajectory], record_every: int = 1) -> AggregateCurve:
    if not trajectories:
        raise DataError("no trajectories to aggregate")
    n = trajectories[0].cumulative.size
    if any(tr.cumulative.size != n for tr in trajectories):
        raise DataError("trajectories have different lengths")
    acc = _RunningCurve(recorded_rounds(n, record_every))
    for tr in trajectories:
        acc.add(tr.cumulative)
    return acc.result()


def _episode_job(args) -> np.ndarray:
    policy, env, horizon, root_seed, run = args
    rng = RngStream(root_seed, (run,))
    return run_episode(policy, env, horizon, rng).cumulative


def _trajectories(policy, config: ExperimentConfig, pool, workers: int) -> Iterable[np.ndarray]:
    jobs = ((policy, config.env, config.horizon, config.root_seed, r) for r in range(config.runs))
    if pool is None:
        return map(_episode_job, jobs)
    chunk = max(1, config.runs // (8 * workers))
    return pool.map(_episode_job, jobs, chunksize=chunk)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> dict[str, AggregateCurve]:
    """Aggregate curve per policy, keyed by policy name.

    Trajectories are folded in run order whatever the worker count, so the
    output is bit-identical for any ``workers``.
    """
    names = [p.name for p in config.policies]
    if len(set(names)) != len(names):
        raise ParameterDomainError(f"policy names must be unique, got {names}")
    rounds = recorded_rounds(config.horizon, config.record_every)
    curves = {}
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for policy in config.policies:
            acc = _RunningCurve(rounds)
            for cumulative in _trajectories(policy, config, pool, workers):
                acc.add(cumulative)
            curves[policy.name] = acc.result()
            mean, se = curves[policy.name].final()
            log.info("%s: regret at n=%d is %.4g +- %.2g", policy.name, config.horizon, mean, se)
    finally:
        if pool is not None:
            pool.shutdown()
    return curves
