"""Experiment configuration: YAML parsing, validation, overrides, hashing.

The document is a YAML mapping; unknown keys are rejected so typos fail
loudly. Every omitted key takes the documented default. The resolved
configuration hashes to a stable hex digest that is stamped into every
trace and output manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .benchmarks import EpidemicConfig, MixtureNoiseSpec, benchmark_names
from .errors import ConfigError, ParseError, ValidationError

_ALGORITHMS = ("excbo", "ucb", "anm")
_BETA_MODES = ("constant", "sqrt_log")
_PROPAGATION_MODES = ("sampled", "mean")
_INITIAL_RANGE = (5, 20)

_NOISE_KEYS = {"sigma", "w1", "w2", "mu1", "mu2", "c1", "c2",
               "scale_is_variance"}
_EPIDEMIC_KEYS = {"groups", "horizon", "gamma", "initial_infectious",
                  "true_betas", "beta_low", "beta_high", "reference_seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str
    seeds: tuple[int, ...]
    algorithms: tuple[str, ...] = ("excbo", "ucb")
    rounds: int = 60
    initial_samples: int = 10
    allow_initial_outside_range: bool = False
    mc_paths: int = 32
    mixture_components: int = 2
    beta0: float = 2.0
    beta_mode: str = "constant"
    acquisition_budget: int = 256
    propagation_mode: str = "sampled"
    refit_period: int = 5
    search_budget: int = 16
    noise: MixtureNoiseSpec = field(default_factory=MixtureNoiseSpec)
    epidemic: EpidemicConfig = field(default_factory=EpidemicConfig)
    output_dir: str = "results"
    oracle_budget: int = 10000
    regret_draws: int = 64
    oracle_tolerance: float = 0.05

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["algorithms"] = list(self.algorithms)
        return json.loads(json.dumps(d))  # plain types only

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)}


def _require(cond: bool, message: str):
    if not cond:
        raise ValidationError(message)


def parse_config(document: str) -> ExperimentConfig:
    """Parse a YAML document into a validated ExperimentConfig."""
    try:
        data = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("configuration must be a mapping")
    return config_from_dict(data)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def config_from_dict(data: dict) -> ExperimentConfig:
    for key in data:
        if key not in _TOP_KEYS:
            raise ParseError(f"unknown key {key!r}")
    for sub, allowed in (("noise", _NOISE_KEYS), ("epidemic", _EPIDEMIC_KEYS)):
        block = data.get(sub) or {}
        if not isinstance(block, dict):
            raise ParseError(f"{sub!r} must be a mapping")
        for key in block:
            if key not in allowed:
                raise ParseError(f"unknown key {sub}.{key!r}")

    if "benchmark" not in data:
        raise ValidationError("missing required key 'benchmark'")
    if "seeds" not in data:
        raise ValidationError("missing required key 'seeds'")

    kwargs = dict(data)
    try:
        kwargs["noise"] = MixtureNoiseSpec(**(data.get("noise") or {}))
        epi = dict(data.get("epidemic") or {})
        if "initial_infectious" in epi:
            epi["initial_infectious"] = tuple(epi["initial_infectious"])
        if "true_betas" in epi:
            epi["true_betas"] = np.asarray(epi["true_betas"], dtype=float)
        kwargs["epidemic"] = EpidemicConfig(**epi)
    except (ConfigError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc

    try:
        kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        kwargs["algorithms"] = tuple(data.get("algorithms", ("excbo", "ucb")))
        cfg = ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc

    _require(cfg.benchmark in benchmark_names(),
             f"unknown benchmark {cfg.benchmark!r}; known: {benchmark_names()}")
    _require(len(cfg.seeds) > 0, "seeds must be non-empty")
    _require(len(cfg.algorithms) > 0, "algorithms must be non-empty")
    for alg in cfg.algorithms:
        _require(alg in _ALGORITHMS,
                 f"unknown algorithm {alg!r}; known: {_ALGORITHMS}")
    _require(len(set(cfg.algorithms)) == len(cfg.algorithms),
             "algorithms must be unique")
    _require(cfg.rounds >= 0, "rounds must be >= 0")
    lo, hi = _INITIAL_RANGE
    if not cfg.allow_initial_outside_range:
        _require(lo <= cfg.initial_samples <= hi,
                 f"initial_samples={cfg.initial_samples} outside the default "
                 f"range [{lo},{hi}]; set allow_initial_outside_range to "
                 "override")
    _require(cfg.initial_samples >= 3, "initial_samples must be >= 3")
    _require(cfg.mc_paths >= 1, "mc_paths must be >= 1")
    _require(cfg.mixture_components >= 1, "mixture_components must be >= 1")
    _require(cfg.beta0 >= 0, "beta0 must be >= 0")
    _require(cfg.beta_mode in _BETA_MODES,
             f"beta_mode must be one of {_BETA_MODES}")
    _require(cfg.acquisition_budget >= 1, "acquisition_budget must be >= 1")
    _require(cfg.propagation_mode in _PROPAGATION_MODES,
             f"propagation_mode must be one of {_PROPAGATION_MODES}")
    _require(cfg.refit_period >= 1, "refit_period must be >= 1")
    _require(cfg.search_budget >= 1, "search_budget must be >= 1")
    _require(cfg.oracle_budget >= 10000, "oracle_budget must be >= 10000")
    _require(cfg.regret_draws >= 1, "regret_draws must be >= 1")
    _require(cfg.oracle_tolerance > 0, "oracle_tolerance must be positive")
    return cfg


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key=value`` / ``sub.key=value`` strings onto a raw mapping."""
    out = json.loads(json.dumps(data))
    for item in overrides or ():
        if "=" not in item:
            raise ParseError(f"override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ParseError(f"cannot parse override value {raw!r}: {exc}")
        parts = key.strip().split(".")
        target = out
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ParseError(f"override path {key!r} crosses a scalar")
        target[parts[-1]] = value
    return out
