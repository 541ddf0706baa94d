"""Command-line front end.

Config files are INI-style documents read with :mod:`configparser` (no
interpolation, keys case-sensitive, ``#`` or ``;`` comments). The grammar is
documented in README.md; a minimal file::

    [env]
    kind = bernoulli
    K = 10

    [policy:varts]

    [run]
    seed = 7

Exit codes: 0 success, 1 usage or config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .bounds import KnownVarianceInputs, UnknownVarianceInputs, bound_known_variance, bound_unknown_variance
from .envs import EnvSpec, GaussianKnownVar, GaussianNG, gaussian_known_spec, make_env_spec
from .errors import BanditLabError, ConfigError
from .policies import POLICY_KINDS, PolicySpec
from .prior_fit import FIT_MODES, fit_env_prior, fit_normal_gamma, summarize
from .rand import NormalGammaParams, RngStream
from .runner import AggregateCurve, ExperimentConfig, run_experiment

log = logging.getLogger(__name__)

CSV_HEADER = ("round", "mean_regret", "stderr", "runs", "policy", "env", "K", "horizon", "seed")
WORKERS_ENV = "BANDIT_LAB_WORKERS"
# stream used to draw prior samples for fitted VarTS priors; run streams use paths (r, ...) with r < runs
FIT_STREAM = 2**32

ENV_KEYS = {
    "bernoulli": {"kind", "K"},
    "beta": {"kind", "K", "scale"},
    "gaussian": {"kind", "K", "kappa0", "alpha0", "beta0"},
    "gaussian_known": {"kind", "K", "prior_mean", "prior_var", "sigma2"},
}
POLICY_KEYS = {
    "gaussian_ts": {"kind", "prior", "prior_mean", "prior_var", "sigma2"},
    "varts": {"kind", "prior", "fit_mode", "fit_samples", "mu0", "kappa0", "alpha0", "beta0"},
    "ts14": {"kind", "alpha"},
    "ts20": {"kind"},
    "bernoulli_ts": {"kind"},
    "ucb1": {"kind"},
    "ucb1_tuned": {"kind"},
    "ucb_v": {"kind", "b", "zeta"},
}
RUN_KEYS = {"horizon", "runs", "seed", "record_every"}
OUTPUT_KEYS = {"path", "format"}
BOUND_KEYS = {"delta"}
NG_KEYS = ("mu0", "kappa0", "alpha0", "beta0")


class UsageError(BanditLabError):
    pass


# --------------------------------------------------------------------------
# Config parsing


def _locate(text: str, section: str, key: str | None = None) -> tuple[int | None, int | None]:
    """(line, column) of ``key`` inside ``[section]``, or of the section header when key is None."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        m = re.match(r"\[(.*)\]$", stripped)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno, raw.index("[") + 1
            continue
        if key is not None and current == section:
            m = re.match(r"\s*([^=:\s]+)\s*[=:]", raw)
            if m and m.group(1) == key:
                return lineno, m.start(1) + 1
    return None, None


@dataclass
class _Reader:
    """Typed access to one section, remembering which keys were consumed."""

    text: str
    name: str
    values: dict[str, str]
    used: set = field(default_factory=set)

    def err(self, key: str | None, message: str) -> ConfigError:
        line, col = _locate(self.text, self.name, key)
        where = f"[{self.name}]" + (f" {key}" if key else "")
        return ConfigError(f"{where}: {message}", line, col)

    def has(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str, default: str | None = None) -> str | None:
        self.used.add(key)
        return self.values.get(key, default)

    def _convert(self, key, default, conv, what):
        value = self.raw(key)
        if value is None:
            if default is _REQUIRED:
                raise self.err(None, f"missing required key {key!r}")
            return default
        try:
            return conv(value)
        except (ValueError, OverflowError):
            raise self.err(key, f"expected {what}, got {value!r}") from None

    def int(self, key, default=None):
        return self._convert(key, default, lambda v: int(v, 10), "an integer")

    def float(self, key, default=None):
        return self._convert(key, default, _finite_float, "a finite real number")

    def floats(self, key, default=None):
        return self._convert(key, default, _float_list, "a comma-separated list of reals")

    def check_keys(self, allowed: set) -> None:
        for key in self.values:
            if key not in allowed:
                raise self.err(key, f"unknown key {key!r}; allowed keys are {sorted(allowed)}")


_REQUIRED = object()


def _finite_float(value: str) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise ValueError(value)
    return x


def _float_list(value: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", value.strip()) if p]
    if not parts:
        raise ValueError(value)
    return tuple(_finite_float(p) for p in parts)


@dataclass(frozen=True)
class PolicySection:
    name: str
    kind: str
    reader: _Reader = field(compare=False, repr=False)


@dataclass
class CliConfig:
    """Parsed config: enough to build an ExperimentConfig for any K."""

    text: str
    env_kind: str
    K: int
    env: _Reader
    policies: list[PolicySection]
    horizon: int
    runs: int
    seed: int
    record_every: int
    out_path: str | None
    out_format: str
    delta: float | None

    def env_spec(self, K: int | None = None) -> EnvSpec:
        K = self.K if K is None else K
        r = self.env
        try:
            if self.env_kind == "gaussian_known":
                return gaussian_known_spec(
                    K,
                    prior_var=_scalar_or_list(r.floats("prior_var", (1.0,))),
                    sigma2=_scalar_or_list(r.floats("sigma2", (1.0,))),
                    prior_mean=_optional_list(r.floats("prior_mean"), K),
                )
            spec = make_env_spec(self.env_kind, K)
            if self.env_kind == "beta" and r.has("scale"):
                spec = replace(spec, scale=r.float("scale"))
            if self.env_kind == "gaussian" and any(r.has(k) for k in ("kappa0", "alpha0", "beta0")):
                priors = tuple(
                    replace(
                        p,
                        kappa0=r.float("kappa0", p.kappa0),
                        alpha0=r.float("alpha0", p.alpha0),
                        beta0=r.float("beta0", p.beta0),
                    )
                    for p in spec.priors
                )
                spec = GaussianNG(priors)
            return spec
        except (BanditLabError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise r.err(None, str(exc)) from None

    def policy_specs(self, env: EnvSpec) -> tuple[PolicySpec, ...]:
        return tuple(self._policy_spec(p, env) for p in self.policies)

    def _policy_spec(self, sec: PolicySection, env: EnvSpec) -> PolicySpec:
        r = sec.reader
        try:
            if sec.kind == "gaussian_ts":
                return _gaussian_ts_spec(sec, env)
            if sec.kind == "varts":
                return PolicySpec("varts", ng_prior=self._varts_prior(sec, env), label=sec.name)
            if sec.kind == "ts14":
                return PolicySpec("ts14", alpha_param=r.float("alpha", 0.5), label=sec.name)
            if sec.kind == "ucb_v":
                return PolicySpec("ucb_v", ucb_b=r.float("b", 1.0), ucb_zeta=r.float("zeta", 1.2), label=sec.name)
            return PolicySpec(sec.kind, label=sec.name)
        except ConfigError:
            raise
        except (BanditLabError, ValueError) as exc:
            raise r.err(None, str(exc)) from None

    def _varts_prior(self, sec: PolicySection, env: EnvSpec):
        r = sec.reader
        explicit = [k for k in NG_KEYS if r.has(k)]
        mode = r.raw("prior", "explicit" if explicit else "auto")
        if mode not in ("auto", "env", "fit", "explicit"):
            raise r.err("prior", f"expected auto, env, fit or explicit, got {mode!r}")
        if mode == "explicit" or explicit:
            if mode != "explicit" or len(explicit) != 4:
                raise r.err(None, f"an explicit prior needs all of {NG_KEYS} and prior = explicit")
            return NormalGammaParams(*(r.float(k) for k in NG_KEYS))
        if mode == "auto":
            mode = "env" if isinstance(env, GaussianNG) else "fit"
        if mode == "env":
            if not isinstance(env, GaussianNG):
                raise r.err("prior", "prior = env needs a Normal-Gamma environment (kind = gaussian)")
            return env.priors
        fit_mode = r.raw("fit_mode", "variance")
        if fit_mode not in FIT_MODES:
            raise r.err("fit_mode", f"expected one of {FIT_MODES}, got {fit_mode!r}")
        samples = r.int("fit_samples", 10_000)
        if samples < 2:
            raise r.err("fit_samples", "need at least 2 samples")
        return fit_env_prior(env, RngStream(self.seed, (FIT_STREAM,)), samples, fit_mode)

    def experiment(self, K: int | None = None) -> ExperimentConfig:
        env = self.env_spec(K)
        return ExperimentConfig(env, self.policy_specs(env), self.horizon, self.runs, self.seed, self.record_every)


def _scalar_or_list(values: tuple[float, ...]):
    return values[0] if len(values) == 1 else values


def _optional_list(values, K):
    if values is None:
        return None
    return np.broadcast_to(np.asarray(values, float), (K,)) if len(values) == 1 else values


def _gaussian_ts_spec(sec: PolicySection, env: EnvSpec) -> PolicySpec:
    r = sec.reader
    mode = r.raw("prior", "auto")
    if mode not in ("auto", "env", "baseline"):
        raise r.err("prior", f"expected auto, env or baseline, got {mode!r}")
    if mode == "auto":
        mode = "env" if isinstance(env, GaussianKnownVar) else "baseline"
    if mode == "env":
        if not isinstance(env, GaussianKnownVar):
            raise r.err("prior", "prior = env needs kind = gaussian_known")
        defaults = (tuple(env.prior_mean), tuple(env.prior_var), tuple(env.sigma2))
    else:
        defaults = ((0.0,), (1.0,), (1.0,))
    values = [_scalar_or_list(r.floats(k, d)) for k, d in zip(("prior_mean", "prior_var", "sigma2"), defaults)]
    return PolicySpec("gaussian_ts", *values, label=sec.name)


def parse_cli_config(text: str) -> CliConfig:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True, default_section="\x00defaults"
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header before the first key", exc.lineno, 1) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(":", 1)[-1].strip(), exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r}; expected 'key = value' or '[section]'", lineno, 1) from None

    readers = {name: _Reader(text, name, dict(parser.items(name))) for name in parser.sections()}
    for name in readers:
        if name not in ("env", "run", "output", "bound") and not name.startswith("policy:"):
            line, col = _locate(text, name)
            raise ConfigError(f"unknown section [{name}]", line, col)
    for required in ("env", "run"):
        if required not in readers:
            raise ConfigError(f"missing required section [{required}]")

    env = readers["env"]
    env_kind = env.raw("kind")
    if env_kind is None:
        raise env.err(None, "missing required key 'kind'")
    if env_kind not in ENV_KEYS:
        raise env.err("kind", f"unknown environment {env_kind!r}; expected one of {sorted(ENV_KEYS)}")
    env.check_keys(ENV_KEYS[env_kind])
    K = env.int("K", _REQUIRED)
    if K < 1:
        raise env.err("K", f"K must be >= 1, got {K}")

    policies = []
    for name, reader in readers.items():
        if not name.startswith("policy:"):
            continue
        label = name.split(":", 1)[1].strip()
        if not label:
            raise reader.err(None, "policy sections are named [policy:NAME]")
        kind = reader.raw("kind", label)
        if kind not in POLICY_KINDS:
            raise reader.err("kind" if reader.has("kind") else None, f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")
        reader.check_keys(POLICY_KEYS[kind])
        policies.append(PolicySection(label, kind, reader))
    if not policies:
        raise ConfigError("need at least one [policy:NAME] section")

    run = readers["run"]
    run.check_keys(RUN_KEYS)
    horizon = run.int("horizon", 2000)
    runs = run.int("runs", 1000)
    seed = run.int("seed", _REQUIRED)
    record_every = run.int("record_every", 1)
    for key, value in (("horizon", horizon), ("runs", runs), ("record_every", record_every)):
        if value < 1:
            raise run.err(key, f"{key} must be >= 1, got {value}")
    if not 0 <= seed < 2**64:
        raise run.err("seed", f"seed must be a 64-bit unsigned integer, got {seed}")

    out = readers.get("output", _Reader(text, "output", {}))
    out.check_keys(OUTPUT_KEYS)
    out_format = out.raw("format", "csv")
    if out_format != "csv":
        raise out.err("format", f"only csv output is supported, got {out_format!r}")

    bound = readers.get("bound", _Reader(text, "bound", {}))
    bound.check_keys(BOUND_KEYS)
    delta = bound.float("delta")
    if delta is not None and not 0 < delta <= 1:
        raise bound.err("delta", f"delta must lie in (0, 1], got {delta}")

    cfg = CliConfig(text, env_kind, K, env, policies, horizon, runs, seed, record_every, out.raw("path"), out_format, delta)
    # build once so that domain errors surface at parse time
    cfg.env_spec()
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    return parse_cli_config(text).experiment()


# --------------------------------------------------------------------------
# Output


def write_curve_csv(path: Path, curve: AggregateCurve, policy: str, env: str, K: int, horizon: int, seed: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rnd, mean, se in zip(curve.rounds, curve.mean_regret, curve.stderr):
            w.writerow((int(rnd), repr(float(mean)), repr(float(se)), curve.runs, policy, env, K, horizon, seed))


def _write_all(cfg: CliConfig, exp: ExperimentConfig, curves, out: Path, suffix: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, curve in curves.items():
        path = out / f"{name}{suffix}.csv"
        write_curve_csv(path, curve, name, exp.env.name, exp.env.K, exp.horizon, exp.root_seed)
        paths.append(path)
    return paths


def _read_samples(path: str) -> list[float]:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(_finite_float(line))
            except ValueError:
                raise ConfigError(f"{path}: expected one real number per line, got {line!r}", lineno, 1) from None
    return values


# --------------------------------------------------------------------------
# Commands


def _load(path: str) -> CliConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return parse_cli_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _experiment(cfg: CliConfig, path: str, K: int | None = None) -> ExperimentConfig:
    try:
        return cfg.experiment(K)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _out_dir(args, cfg: CliConfig) -> Path:
    out = args.out or cfg.out_path
    if not out:
        raise UsageError("no output directory: pass --out or set [output] path")
    return Path(out)


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    exp = _experiment(cfg, args.config)
    out = _out_dir(args, cfg)
    curves = run_experiment(exp, workers=args.workers)
    for path in _write_all(cfg, exp, curves, out, ""):
        print(path)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    try:
        ks = [int(k) for k in args.k.split(",") if k.strip()]
    except ValueError:
        raise UsageError(f"--k expects comma-separated integers, got {args.k!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise UsageError(f"--k values must be >= 1, got {args.k!r}")
    out = _out_dir(args, cfg)
    exps = [_experiment(cfg, args.config, K) for K in ks]
    for K, exp in zip(ks, exps):
        curves = run_experiment(exp, workers=args.workers)
        for path in _write_all(cfg, exp, curves, out, f"_K{K}"):
            print(path)
    return 0


def cmd_bound(args) -> int:
    cfg = _load(args.config)
    env = _experiment(cfg, args.config).env
    n = cfg.horizon
    delta = cfg.delta if cfg.delta is not None else 1.0 / n
    print(f"env = {env.name}\nK = {env.K}\nhorizon = {n}\ndelta = {delta!r}")
    if isinstance(env, GaussianKnownVar):
        value = bound_known_variance(KnownVarianceInputs(n, delta, tuple(env.prior_var), tuple(env.sigma2)))
        print(f"known_variance_bound = {value!r}")
        return 0
    if isinstance(env, GaussianNG):
        priors, source = env.priors, "environment"
    else:
        priors = fit_env_prior(env, RngStream(cfg.seed, (FIT_STREAM,)))
        source = "fitted"
    c, value = bound_unknown_variance(UnknownVarianceInputs(n, delta, priors))
    print(f"prior = {source}\nC = {c!r}\nunknown_variance_bound = {value!r}")
    return 0


def cmd_fit_prior(args) -> int:
    summary = summarize(_read_samples(args.means), _read_samples(args.precisions))
    ng = fit_normal_gamma(summary, args.mode)
    for name in NG_KEYS:
        print(f"{name} = {getattr(ng, name)!r}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bandit-lab", description="Bayesian bandit simulations with heterogeneous variances.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("--config", required=True)
        if out:
            sp.add_argument("--out", help="output directory (overrides [output] path)")
            sp.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")

    sp = sub.add_parser("simulate", help="run every configured policy and write one CSV per policy")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep-k", help="repeat the simulation for several arm counts")
    common(sp)
    sp.add_argument("--k", required=True, help="comma-separated arm counts, e.g. 2,4,8,16,32")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bound", help="print the regret bound for the configured prior")
    common(sp, out=False)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("fit-prior", help="method-of-moments Normal-Gamma fit from sample files")
    sp.add_argument("--means", required=True)
    sp.add_argument("--precisions", required=True)
    sp.add_argument("--mode", choices=FIT_MODES, default="exact")
    sp.set_defaults(func=cmd_fit_prior)
    return p


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 0) is None:
            args.workers = _default_workers()
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BanditLabError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
