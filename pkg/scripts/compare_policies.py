"""Final-round Bayes regret of every agent on one environment.

    python scripts/compare_policies.py --env beta --K 10 --runs 200
"""

import argparse
import logging
import time

from bandit_lab.cli import parse_config
from bandit_lab.policies import POLICY_KINDS
from bandit_lab.runner import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--env", choices=["bernoulli", "beta", "gaussian"], default="bernoulli")
    ap.add_argument("--K", type=int, default=10)
    ap.add_argument("--horizon", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    sections = "".join(f"[policy:{kind}]\n" for kind in POLICY_KINDS)
    text = (
        f"[env]\nkind = {args.env}\nK = {args.K}\n{sections}"
        f"[run]\nhorizon = {args.horizon}\nruns = {args.runs}\nseed = {args.seed}\nrecord_every = {args.horizon}\n"
    )
    start = time.perf_counter()
    curves = run_experiment(parse_config(text), workers=args.workers)
    print(f"\n{args.env} K={args.K} n={args.horizon} runs={args.runs} ({time.perf_counter() - start:.0f}s)")
    print(f"{'policy':<14}{'regret':>10}{'stderr':>9}")
    for name, curve in sorted(curves.items(), key=lambda kv: kv[1].final()[0]):
        mean, se = curve.final()
        print(f"{name:<14}{mean:>10.2f}{se:>9.2f}")


if __name__ == "__main__":
    main()
