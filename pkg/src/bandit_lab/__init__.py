"""Variance-adaptive Thompson sampling and baselines for Bayesian multi-armed bandits."""

__version__ = "0.1.0"
