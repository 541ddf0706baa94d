"""Empirical Bayes regret against the closed-form upper bounds over a range of horizons.

Known variances: Gaussian TS with the true prior. Unknown variances: VarTS on the
Normal-Gamma Gaussian environment. delta = 1/n as in the bounds' natural tuning.
"""

import argparse

import numpy as np

from bandit_lab.bounds import KnownVarianceInputs, UnknownVarianceInputs, bound_known_variance, bound_unknown_variance
from bandit_lab.envs import gaussian_known_spec, make_env_spec
from bandit_lab.policies import PolicySpec
from bandit_lab.runner import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=10)
    ap.add_argument("--horizon", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--prior-var", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    K, n = args.K, args.horizon
    every = max(1, n // 10)

    sigma2 = np.random.default_rng(args.seed).uniform(0.25, 1.0, K)
    env = gaussian_known_spec(K, prior_var=args.prior_var, sigma2=sigma2)
    pol = PolicySpec("gaussian_ts", tuple(env.prior_mean), args.prior_var, tuple(sigma2))
    known = run_experiment(ExperimentConfig(env, (pol,), n, args.runs, args.seed, every))["gaussian_ts"]

    ng_env = make_env_spec("gaussian", K)
    varts = PolicySpec("varts", ng_prior=ng_env.priors)
    unknown = run_experiment(ExperimentConfig(ng_env, (varts,), n, args.runs, args.seed, every))["varts"]

    print(f"{'n':>6}{'gts regret':>12}{'known bound':>13}{'varts regret':>14}{'unknown bound':>15}")
    for i, t in enumerate(known.rounds):
        t = int(t)
        kb = bound_known_variance(KnownVarianceInputs(t, 1 / t, [args.prior_var] * K, sigma2))
        _, ub = bound_unknown_variance(UnknownVarianceInputs(t, 1 / t, ng_env.priors))
        print(f"{t:>6}{known.mean_regret[i]:>12.2f}{kb:>13.1f}{unknown.mean_regret[i]:>14.2f}{ub:>15.1f}")


if __name__ == "__main__":
    main()
