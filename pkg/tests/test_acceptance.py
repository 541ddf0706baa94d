"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The simulation criteria run the full Monte-Carlo experiments and take several
minutes on one core; select them with ``-m acceptance`` or skip them with
``-m "not acceptance"``.
"""

import math
import time

import numpy as np
import pytest

from bandit_lab.bounds import (
    KnownVarianceInputs,
    UnknownVarianceInputs,
    bound_known_variance,
    bound_unknown_variance,
    lemma_sum_checks,
)
from bandit_lab.cli import parse_config, run_cli
from bandit_lab.envs import gaussian_known_spec, make_env_spec
from bandit_lab.hier_reg import HierPrior, TaskData, posterior_direct, posterior_woodbury
from bandit_lab.policies import (
    ArmStats,
    PolicySpec,
    gaussian_ts_posterior,
    init_policy,
    observe,
    select_arm,
    varts_posterior,
)
from bandit_lab.rand import (
    GaussianParams,
    NormalGammaParams,
    RngStream,
    gamma_variates,
    inverse_gamma_mean,
    normal_variates,
    sample_normal_gamma,
)
from bandit_lab.runner import ExperimentConfig, run_experiment

pytestmark = pytest.mark.acceptance

N = 2000


def timed(fn, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - start


def fmt(curve):
    mean, se = curve.final()
    return f"{mean:.3f} +- {se:.3f}"


# -- 1, 2, 6: bound dominance and the vanishing-prior limit -------------------


def test_c1_known_variance_bound(report):
    K = 10
    sigma2 = np.random.default_rng(20240601).uniform(0.25, 1.0, K)
    env = gaussian_known_spec(K, prior_var=1.0, sigma2=sigma2)
    pol = PolicySpec("gaussian_ts", tuple(env.prior_mean), 1.0, tuple(sigma2))
    curves, secs = timed(run_experiment, ExperimentConfig(env, (pol,), N, 500, 101))
    mean, se = curves["gaussian_ts"].final()
    bound = bound_known_variance(KnownVarianceInputs(N, 1 / N, [1.0] * K, sigma2))
    ok = 2 * mean <= bound and secs <= 120
    report(1, ok, f"gaussian_ts regret {mean:.3f} +- {se:.3f}, bound {bound:.1f} (ratio {bound / mean:.1f}x), {secs:.0f}s")
    assert ok


def test_c2_unknown_variance_bound(report):
    env = make_env_spec("gaussian", 10)
    pol = PolicySpec("varts", ng_prior=env.priors)
    curves, secs = timed(run_experiment, ExperimentConfig(env, (pol,), N, 500, 102))
    mean, se = curves["varts"].final()
    _, bound = bound_unknown_variance(UnknownVarianceInputs(N, 1 / N, env.priors))
    ok = 2 * mean <= bound and secs <= 180
    report(2, ok, f"varts regret {mean:.3f} +- {se:.3f}, bound {bound:.1f} (ratio {bound / mean:.1f}x), {secs:.0f}s")
    assert ok


def test_c6_vanishing_prior(report):
    K = 10
    env = gaussian_known_spec(K, prior_var=1e-6, sigma2=1.0)
    pol = PolicySpec("gaussian_ts", tuple(env.prior_mean), 1e-6, 1.0)
    curves, secs = timed(run_experiment, ExperimentConfig(env, (pol,), N, 200, 106))
    mean, se = curves["gaussian_ts"].final()
    ok = mean <= 0.05
    report(6, ok, f"gaussian_ts regret {mean:.2e} +- {se:.1e} with prior variance 1e-6, {secs:.0f}s")
    assert ok


# -- 3, 4, 5: orderings on the non-Gaussian environments ---------------------


def _config(kind, K, runs, seed, policies):
    sections = "".join(f"[policy:{p}]\n" for p in policies)
    text = f"[env]\nkind = {kind}\nK = {K}\n{sections}[run]\nhorizon = {N}\nruns = {runs}\nseed = {seed}\n"
    return parse_config(text)


def test_c3_beta_ordering(report):
    cfg = _config("beta", 10, 500, 103, ["varts", "bernoulli_ts"])
    curves, secs = timed(run_experiment, cfg)
    (v, vs), (b, bs) = curves["varts"].final(), curves["bernoulli_ts"].final()
    ok = v + 2 * vs < b - 2 * bs
    report(3, ok, f"beta K=10: varts {v:.2f} +- {vs:.2f} vs bernoulli_ts {b:.2f} +- {bs:.2f}, {secs:.0f}s")
    assert ok


BASELINES = ["gaussian_ts", "ts14", "ts20", "bernoulli_ts", "ucb1", "ucb1_tuned", "ucb_v"]


def test_c4_scalability_gap(report):
    cfg = _config("beta", 32, 200, 104, ["varts"] + BASELINES)
    curves, secs = timed(run_experiment, cfg)
    v = curves["varts"].final()[0]
    ratios = {name: curves[name].final()[0] / v for name in BASELINES}
    worst = min(ratios, key=ratios.get)
    ok = ratios[worst] >= 3 and secs <= 600
    report(4, ok, f"beta K=32: varts {fmt(curves['varts'])}; smallest baseline ratio {worst} {ratios[worst]:.1f}x, {secs:.0f}s")
    assert ok


def test_c5_bernoulli_sanity(report):
    cfg = _config("bernoulli", 10, 500, 105, ["varts", "bernoulli_ts", "ucb1", "ucb_v"])
    curves, secs = timed(run_experiment, cfg)
    final = {name: c.final() for name, c in curves.items()}
    v, b = final["varts"][0], final["bernoulli_ts"][0]
    ok = v <= 1.25 * b
    for ts in ("varts", "bernoulli_ts"):
        for ucb in ("ucb1", "ucb_v"):
            (m1, s1), (m2, s2) = final[ts], final[ucb]
            ok &= m1 + 2 * math.hypot(s1, s2) < m2
    detail = ", ".join(f"{k} {m:.2f} +- {s:.2f}" for k, (m, s) in final.items())
    report(5, ok, f"bernoulli K=10: {detail}, {secs:.0f}s")
    assert ok


# -- 7: incremental statistics against batch recomputation ------------------


def test_c7_oracle_equivalence(report):
    gen = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(gen.integers(1, 51))
        xs = gen.normal(gen.normal(), gen.uniform(0.1, 10), n)
        ng = NormalGammaParams(gen.normal(), gen.uniform(0.01, 10), gen.uniform(0.5, 10), gen.uniform(0.01, 10))
        g = GaussianParams(gen.normal(), gen.uniform(0.01, 10))
        s2 = gen.uniform(0.1, 5)
        inc = ArmStats()
        for x in xs:
            inc.update(float(x))
        batch = ArmStats.from_samples(xs)
        pairs = [
            (varts_posterior(ng, inc), varts_posterior(ng, batch)),
            (gaussian_ts_posterior(g, s2, inc), gaussian_ts_posterior(g, s2, batch)),
        ]
        for got, want in pairs:
            got, want = np.array(got), np.array(want)
            worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-300))))

    identical = True
    for trial in range(50):
        K = int(gen.integers(2, 8))
        mu = gen.normal(size=K)
        a = init_policy(PolicySpec("ts20"), K)
        b = init_policy(PolicySpec("varts", ng_prior=NormalGammaParams(0.0, 0.0, 0.5, 0.5)), K)
        ra, rb = RngStream(trial), RngStream(trial)
        for _ in range(200):
            arm = select_arm(a, ra)
            identical &= arm == select_arm(b, rb)
            x = float(mu[arm - 1] + gen.normal())
            observe(a, arm, x)
            observe(b, arm, x)
    ok = worst <= 1e-10 and identical
    report(7, ok, f"max relative deviation {worst:.1e} over 1000 sequences; ts20 == varts(0, 0, 0.5, 0.5): {identical}")
    assert ok


# -- 8: distribution identities -----------------------------------------------


def _z(samples, expected):
    samples = np.asarray(samples, float)
    return abs(samples.mean() - expected) / (samples.std(ddof=1) / math.sqrt(samples.size))


def _identities():
    rng = RngStream(8)
    draws = 200_000
    zs = {}
    x = gamma_variates(np.full(draws, 2.5), 1.5, rng)
    zs["gamma mean"] = _z(x, 2.5 / 1.5)
    zs["gamma variance"] = _z((x - 2.5 / 1.5) ** 2, 2.5 / 1.5**2)
    lam = gamma_variates(np.full(draws, 4.0), 2.0, rng)
    zs["E[1/lam]"] = _z(1.0 / lam, inverse_gamma_mean(4.0, 2.0))
    n = 6
    xs = normal_variates(np.zeros((draws, n)), 3.0, rng)
    zs["chi-square mean"] = _z(((xs - xs.mean(axis=1, keepdims=True)) ** 2).sum(axis=1) / 3.0, n - 1)
    ng = NormalGammaParams(0.5, 2.0, 5.0, 3.0)
    mu = np.array([sample_normal_gamma(ng, rng)[0] for _ in range(draws)])
    zs["NG Var(mu)"] = _z((mu - ng.mu0) ** 2, ng.beta0 / (ng.kappa0 * (ng.alpha0 - 1)))
    return zs


def test_c8_distribution_identities(report):
    zs, secs = timed(_identities)
    ok = max(zs.values()) <= 5 and secs <= 60
    report(8, ok, ", ".join(f"{k} z={v:.2f}" for k, v in zs.items()) + f" (2e5 draws each), {secs:.0f}s")
    assert ok


# -- 9: hierarchical regression -------------------------------------------------


def _spd(gen, K, scale=1.0):
    A = gen.normal(size=(K, K))
    return scale * (A @ A.T / K + 0.5 * np.eye(K))


def test_c9_hierarchical_regression(report):
    gen = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        K, T = int(gen.integers(1, 9)), int(gen.integers(1, 11))
        prior = HierPrior(gen.normal(size=K), _spd(gen, K))
        Sigma, sigma2 = _spd(gen, K, 0.5), float(gen.uniform(0.1, 2))
        tasks = []
        for _ in range(T):
            X = gen.normal(size=(int(gen.integers(1, 65)), K))
            tasks.append(TaskData(X, X @ gen.normal(size=K) + gen.normal(size=X.shape[0])))
        a = posterior_direct(prior, Sigma, sigma2, tasks)
        b = posterior_woodbury(prior, Sigma, sigma2, tasks)
        for u, v in ((a.mu, b.mu), (a.Lambda, b.Lambda)):
            worst = max(worst, float(np.max(np.abs(u - v)) / max(1.0, np.max(np.abs(v)))))
    prior = HierPrior(np.array([0.3, -1.0]), np.diag([2.0, 0.5]))
    empty = posterior_woodbury(prior, np.eye(2), 1.0, [])
    exact_prior = np.array_equal(empty.mu, prior.mu0) and np.array_equal(empty.Lambda, prior.Lambda0)
    scalar = posterior_direct(HierPrior(np.zeros(1), np.eye(1)), np.eye(1), 1.0, [TaskData([[1.0]], [2.0])])
    scalar_err = max(abs(scalar.Lambda[0, 0] - 1.5), abs(scalar.mu[0] - 2 / 3))
    ok = worst <= 1e-8 and exact_prior and scalar_err <= 1e-12
    report(9, ok, f"direct vs woodbury max rel diff {worst:.1e}; T=0 returns prior: {exact_prior}; scalar example error {scalar_err:.1e}")
    assert ok


# -- 10: summation lemmas ---------------------------------------------------------


def test_c10_lemma_grid(report):
    ns = np.unique(np.logspace(0, 6, 25).astype(int))
    as_ = np.logspace(-3, 6, 19)
    failures = 0
    for n in ns:
        for a in as_:
            lhs, rhs, lr, rr = lemma_sum_checks(int(n), float(a))
            failures += not (lhs <= rhs and lr <= rr)
    ok = failures == 0
    report(10, ok, f"{failures} failures on a {ns.size} x {as_.size} grid, n in [1, 1e6], a in [1e-3, 1e6]")
    assert ok


# -- 11: byte-identical CLI output ------------------------------------------------


def test_c11_cli_determinism(report, tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[env]\nkind = beta\nK = 6\n[policy:varts]\n[policy:bernoulli_ts]\n[policy:ucb1_tuned]\n"
        "[run]\nhorizon = 300\nruns = 24\nseed = 11\nrecord_every = 10\n"
    )
    outputs = []
    for i, workers in enumerate(["1", "1", "8"]):
        out = tmp_path / f"run{i}"
        assert run_cli(["simulate", "--config", str(cfg), "--out", str(out), "--workers", workers]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = len(outputs[0]) == 3 and outputs[0] == outputs[1] == outputs[2]
    report(11, ok, f"simulate twice with --workers 1 and once with --workers 8: {len(outputs[0])} CSV files byte-identical: {ok}")
    assert ok
