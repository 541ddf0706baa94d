"""Regret at the horizon as the number of arms grows, on the beta environment.

    python scripts/scalability.py --ks 2,4,8,16,32 --runs 100
"""

import argparse

from bandit_lab.cli import parse_config
from bandit_lab.runner import run_experiment

POLICIES = ["varts", "ts14", "ts20", "bernoulli_ts", "ucb1_tuned", "ucb_v"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--env", default="beta")
    ap.add_argument("--ks", default="2,4,8,16,32")
    ap.add_argument("--horizon", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    ks = [int(k) for k in args.ks.split(",")]
    sections = "".join(f"[policy:{p}]\n" for p in POLICIES)
    print("K   " + "".join(f"{p:>14}" for p in POLICIES))
    for K in ks:
        text = (
            f"[env]\nkind = {args.env}\nK = {K}\n{sections}"
            f"[run]\nhorizon = {args.horizon}\nruns = {args.runs}\nseed = {args.seed}\nrecord_every = {args.horizon}\n"
        )
        curves = run_experiment(parse_config(text), workers=args.workers)
        cells = "".join(f"{curves[p].final()[0]:>14.2f}" for p in POLICIES)
        print(f"{K:<4}{cells}", flush=True)


if __name__ == "__main__":
    main()
