import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bandit_lab.errors import DataError, DegeneratePriorError, ParameterDomainError
from bandit_lab.policies import (
    TS20_PRIOR,
    ArmStats,
    NormalGammaTSState,
    PolicySpec,
    argmax_random_tiebreak,
    gaussian_ts_posterior,
    init_policy,
    observe,
    select_arm,
    ucb_index,
    varts_posterior,
)
from bandit_lab.rand import GaussianParams, NormalGammaParams, RngStream

rewards = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=50)


def batch_varts(prior, xs):
    xs = np.asarray(xs, float)
    n = xs.size
    xbar = xs.mean()
    m2 = float(np.sum((xs - xbar) ** 2))
    kappa = prior.kappa0 + n
    beta = prior.beta0 + m2 / 2 + prior.kappa0 * n * (xbar - prior.mu0) ** 2 / (2 * kappa)
    return (prior.kappa0 * prior.mu0 + n * xbar) / kappa, kappa, prior.alpha0 + n / 2, beta


def batch_gaussian(prior, s2, xs):
    xs = np.asarray(xs, float)
    var = 1 / (1 / prior.variance + xs.size / s2)
    return var * (prior.mean / prior.variance + xs.sum() / s2), var


def close(a, b, rtol=1e-10, atol=1e-10):
    return np.allclose(a, b, rtol=rtol, atol=atol)


# -- posteriors -----------------------------------------------------------


def test_gaussian_posterior_examples():
    prior = GaussianParams(0.0, 1.0)
    assert gaussian_ts_posterior(prior, 1.0, ArmStats()) == (0.0, 1.0)
    mu, var = gaussian_ts_posterior(prior, 1.0, ArmStats(1, 2.0, 0.0))
    assert var == 0.5 and mu == 1.0
    assert gaussian_ts_posterior(GaussianParams(3.0, 0.0), 1.0, ArmStats(5, 9.0, 1.0)) == (3.0, 0.0)
    with pytest.raises(ParameterDomainError):
        gaussian_ts_posterior(prior, 0.0, ArmStats())


def test_varts_posterior_examples():
    prior = NormalGammaParams(0.0, 1.0, 2.0, 1.0)
    assert varts_posterior(prior, ArmStats()) == (0.0, 1.0, 2.0, 1.0)
    assert varts_posterior(prior, ArmStats.from_samples([1.0])) == (0.5, 2.0, 2.5, 1.25)
    assert varts_posterior(prior, ArmStats.from_samples([1.0, -1.0])) == (0.0, 3.0, 3.0, 2.0)
    with pytest.raises(DegeneratePriorError):
        varts_posterior(TS20_PRIOR, ArmStats())


def test_observe_examples():
    state = init_policy(PolicySpec("ucb1"), 2)
    observe(state, 1, 3.0)
    observe(state, 1, 1.0)
    assert state.stats(1) == ArmStats(2, 2.0, 2.0)
    state = init_policy(PolicySpec("ucb1"), 1)
    for _ in range(3):
        observe(state, 1, 0.5)
    assert state.stats(1).m2 == 0.0
    assert state.t == 4


def test_bernoulli_clip():
    state = init_policy(PolicySpec("bernoulli_ts"), 2)
    observe(state, 1, 1.7)
    observe(state, 2, -0.3)
    assert state.successes.tolist() == [1, 0]
    assert state.failures.tolist() == [0, 1]
    with pytest.raises(DataError):
        observe(state, 1, 0.5)  # fractional reward needs a stream


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), max_size=60), st.integers(0, 1000))
def test_bernoulli_counts_sum(xs, seed):
    state = init_policy(PolicySpec("bernoulli_ts"), 1)
    rng = RngStream(seed)
    for x in xs:
        observe(state, 1, x, rng)
    assert state.successes[0] + state.failures[0] == len(xs)


def test_non_finite_reward_rejected():
    state = init_policy(PolicySpec("ts20"), 2)
    with pytest.raises(DataError):
        observe(state, 1, math.inf)
    with pytest.raises(IndexError):
        observe(state, 3, 0.0)


@settings(max_examples=200, deadline=None)
@given(rewards, st.floats(-5, 5), st.floats(0.01, 100), st.floats(0.6, 10), st.floats(0.01, 10))
def test_incremental_equals_batch(xs, mu0, kappa0, alpha0, beta0):
    prior = NormalGammaParams(mu0, kappa0, alpha0, beta0)
    spec = PolicySpec("varts", ng_prior=prior)
    state = init_policy(spec, 1)
    g_state = init_policy(PolicySpec("gaussian_ts", mu0, kappa0, beta0), 1)
    for x in xs:
        observe(state, 1, x)
        observe(g_state, 1, x)
    assert close(varts_posterior(prior, state.stats(1)), batch_varts(prior, xs))
    assert close((state.mu_hat[0], state.kappa[0], state.alpha[0], state.beta[0]), batch_varts(prior, xs))
    got = gaussian_ts_posterior(GaussianParams(mu0, kappa0), beta0, g_state.stats(1))
    assert close(got, batch_gaussian(GaussianParams(mu0, kappa0), beta0, xs))


@settings(max_examples=100, deadline=None)
@given(rewards)
def test_stats_match_batch(xs):
    s = ArmStats()
    for x in xs:
        s.update(x)
    ref = ArmStats.from_samples(xs)
    assert s.count == ref.count
    assert close((s.mean, s.m2), (ref.mean, ref.m2), atol=1e-9)
    assert s.m2 >= 0


@settings(max_examples=50, deadline=None)
@given(rewards)
def test_posterior_contraction(xs):
    prior = NormalGammaParams(0.0, 1.0, 1.0, 1.0)
    g = GaussianParams(0.0, 2.0)
    kappas, alphas, variances = [], [], []
    for n in range(len(xs) + 1):
        stats = ArmStats.from_samples(xs[:n])
        _, k, a, _ = varts_posterior(prior, stats)
        kappas.append(k)
        alphas.append(a)
        variances.append(gaussian_ts_posterior(g, 1.0, stats)[1])
    assert np.all(np.diff(kappas) > 0) and np.all(np.diff(alphas) > 0)
    assert np.all(np.diff(variances) <= 0)


# -- UCB indices ----------------------------------------------------------


def test_ucb_examples():
    t = math.exp(2.0)
    assert ucb_index("ucb1", ArmStats(1, 0.5, 0.0), t) == pytest.approx(2.5, rel=1e-12)
    assert ucb_index("ucb1_tuned", ArmStats(4, 0.0, 400.0), math.exp(4.0)) == pytest.approx(0.5, rel=1e-12)
    assert ucb_index("ucb_v", ArmStats(1, 0.0, 0.0), math.e, b=1.0, zeta=1.0) == pytest.approx(3.0, rel=1e-12)
    assert ucb_index("ucb1", ArmStats(), 5) == math.inf
    with pytest.raises(ParameterDomainError):
        ucb_index("ucb1", ArmStats(1, 0.0, 0.0), 0)


# -- selection ------------------------------------------------------------


@pytest.mark.parametrize("kind", ["gaussian_ts", "ts14", "ts20", "bernoulli_ts", "ucb1", "ucb1_tuned", "ucb_v"])
def test_single_arm(kind):
    state = init_policy(PolicySpec(kind), 1)
    rng = RngStream(0)
    for _ in range(5):
        assert select_arm(state, rng) == 1
        observe(state, 1, 0.5, rng)


def test_degenerate_gaussian_posteriors():
    state = init_policy(PolicySpec("gaussian_ts", prior_mean=(5.0, 0.0), prior_var=0.0), 2)
    rng = RngStream(0)
    assert all(select_arm(state, rng) == 1 for _ in range(100))


@pytest.mark.parametrize("kind, pulls", [("ts14", 2), ("ts20", 1), ("ucb1", 1), ("ucb_v", 1)])
def test_forced_round_robin(kind, pulls):
    K = 4
    state = init_policy(PolicySpec(kind), K)
    rng = RngStream(1)
    arms = []
    for _ in range(K * pulls):
        arm = select_arm(state, rng)
        arms.append(arm)
        observe(state, arm, 0.3, rng)
    assert arms == list(range(1, K + 1)) * pulls


def test_beta_floor_keeps_sampling_defined():
    # constant rewards leave beta = 0 for ts14; selection must still work
    state = init_policy(PolicySpec("ts14"), 3)
    rng = RngStream(2)
    for _ in range(30):
        arm = select_arm(state, rng)
        observe(state, arm, 1.0)
    assert np.all(state.beta == 0)


def test_ts20_matches_configured_varts():
    rng_env = np.random.default_rng(0)
    for trial in range(20):
        K = int(rng_env.integers(2, 6))
        means = rng_env.normal(size=K)
        a = init_policy(PolicySpec("ts20"), K)
        b = init_policy(PolicySpec("varts", ng_prior=NormalGammaParams(0.0, 0.0, 0.5, 0.5)), K)
        ra, rb = RngStream(trial), RngStream(trial)
        for _ in range(100):
            arm_a, arm_b = select_arm(a, ra), select_arm(b, rb)
            assert arm_a == arm_b
            x = float(means[arm_a - 1] + rng_env.normal())
            observe(a, arm_a, x)
            observe(b, arm_b, x)


class _Shifted(NormalGammaTSState):
    def scores(self, rng):
        return super().scores(rng) + 1234.5


def test_argmax_shift_invariance():
    spec = PolicySpec("varts", ng_prior=NormalGammaParams(0.0, 1.0, 2.0, 1.0))
    a, b = init_policy(spec, 5), _Shifted(spec, 5)
    for s in (a, b):
        for arm, x in [(1, 0.2), (2, 0.1), (3, 0.5), (4, -0.3), (5, 0.0)]:
            observe(s, arm, x)
    ra, rb = RngStream(9), RngStream(9)
    assert [select_arm(a, ra) for _ in range(500)] == [select_arm(b, rb) for _ in range(500)]


def test_ucb_shift_invariance():
    spec = PolicySpec("ucb1")
    a = init_policy(spec, 3)
    for arm, x in [(1, 0.2), (2, 0.6), (3, 0.4), (1, 0.9)]:
        observe(a, arm, x)
    scores = a.scores(RngStream(0))
    rng1, rng2 = RngStream(4), RngStream(4)
    assert argmax_random_tiebreak(scores, rng1) == argmax_random_tiebreak(scores + 7.0, rng2)


def test_tie_break_is_uniform():
    rng = RngStream(3)
    values = np.array([1.0, 0.0, 1.0, 1.0])
    picks = np.array([argmax_random_tiebreak(values, rng) for _ in range(30_000)])
    counts = np.bincount(picks, minlength=4)
    assert counts[1] == 0
    p = 1 / 3
    se = math.sqrt(p * (1 - p) / picks.size)
    assert np.all(np.abs(counts[[0, 2, 3]] / picks.size - p) < 5 * se)


def test_varts_selection_matches_tournament():
    prior = NormalGammaParams(0.0, 1.0, 2.0, 1.0)
    spec = PolicySpec("varts", ng_prior=prior)
    state = init_policy(spec, 3)
    for arm, xs in {1: [0.1, 0.4, 0.2], 2: [0.5, -0.5], 3: [0.0]}.items():
        for x in xs:
            observe(state, arm, x)
    rng = RngStream(12)
    n = 100_000
    picks = np.bincount([select_arm(state, rng) - 1 for _ in range(n)], minlength=3) / n

    # brute force: independent posterior draws with numpy's own gamma sampler
    gen = np.random.default_rng(13)
    m = 1_000_000
    post = [varts_posterior(prior, state.stats(i + 1)) for i in range(3)]
    samples = np.empty((m, 3))
    for i, (mu, kappa, alpha, beta) in enumerate(post):
        lam = gen.gamma(alpha, 1.0 / beta, m)
        samples[:, i] = mu + gen.standard_normal(m) / np.sqrt(kappa * lam)
    ref = np.bincount(samples.argmax(axis=1), minlength=3) / m
    se = np.sqrt(ref * (1 - ref) / n + ref * (1 - ref) / m)
    assert np.all(np.abs(picks - ref) <= 5 * se)


def test_policy_spec_validation():
    with pytest.raises(ParameterDomainError):
        PolicySpec("thompson")
    with pytest.raises(ParameterDomainError):
        PolicySpec("varts")
    with pytest.raises(ParameterDomainError):
        PolicySpec("ts14", alpha_param=0.0)
    with pytest.raises(ParameterDomainError):
        init_policy(PolicySpec("gaussian_ts", sigma2=(1.0, 2.0)), 3)
    assert PolicySpec("ucb1", label="x").name == "x"
