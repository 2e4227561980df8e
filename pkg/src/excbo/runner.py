"""Seed-sweep harness: oracle optimum, regret, CSV/JSON/SVG emission.

Every (algorithm, seed) pair runs independently with its own derived
RNG streams, so results are byte-identical regardless of --jobs. All
files are written atomically (temp file + rename) and the manifest
records a content hash for each of them.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import backend
from .benchmarks import make_benchmark
from .config import ExperimentConfig
from .errors import (ExcboError, IoError, NonFiniteError, OracleError,
                     ValidationError)
from .loop import ALGORITHMS, LoopSettings, RunTrace
from .scm import GroundTruthScm, sample_scm
from .svg import render_results_svg

_ORACLE_CACHE: dict = {}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def expected_reward(scm: GroundTruthScm, action, rng=None,
                    draws: int = 64) -> float:
    """E[y | action]: noiseless evaluation, or an average of draws for
    systems whose reward keeps a noise floor."""
    if not scm.stochastic_reward:
        return float(sample_scm(scm, action, None, noiseless=True)
                     [scm.graph.reward_node])
    if rng is None:
        rng = np.random.default_rng(0)
    vals = [sample_scm(scm, action, rng)[scm.graph.reward_node]
            for _ in range(draws)]
    return float(np.mean(vals))


def estimate_oracle_optimum(scm: GroundTruthScm, budget: int = 10000,
                            rng: np.random.Generator | None = None,
                            draws: int = 64) -> float:
    """Brute-force estimate of the best achievable expected reward.

    Uniform random scan, a focused re-scan of half the budget around the
    scan's best point (needle-in-haystack optima sit on plateaus the
    global scan resolves only coarsely), then Nelder-Mead refinement
    from the best 5 points seen. The estimate is the maximum over every
    evaluation. Stochastic rewards are averaged over common random
    numbers so the refined surface is deterministic. Cached per
    (benchmark, bounds, noise) fingerprint.
    """
    if budget < 10000:
        raise ValidationError("oracle estimation budget must be >= 10000")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence((0x04AC, 0)))
    key = (scm.name, scm.space.lows.tobytes(), scm.space.highs.tobytes(),
           _scm_fingerprint(scm), budget)
    if key in _ORACLE_CACHE:
        return _ORACLE_CACHE[key]

    def value(a):
        eval_rng = np.random.default_rng(np.random.SeedSequence((0x04AC, 1)))
        try:
            return expected_reward(scm, scm.space.clip(a), eval_rng, draws)
        except NonFiniteError:
            return -np.inf  # broken region: unusable as an optimum

    cands = scm.space.sample_batch(budget, rng)
    scores = np.array([value(a) for a in cands])
    top = int(np.argmax(scores))

    span = scm.space.highs - scm.space.lows
    center = cands[top]
    lo = np.maximum(center - 0.1 * span, scm.space.lows)
    hi = np.minimum(center + 0.1 * span, scm.space.highs)
    zoom = lo + rng.random((budget // 2, scm.space.size)) * (hi - lo)
    zoom_scores = np.array([value(a) for a in zoom])

    all_cands = np.vstack([cands, zoom])
    all_scores = np.concatenate([scores, zoom_scores])
    order = np.argsort(all_scores)[::-1]
    best = float(all_scores[order[0]])
    for idx in order[:5]:
        res = minimize(lambda a: -value(a), all_cands[idx],
                       method="Nelder-Mead",
                       options={"maxiter": 100, "adaptive": True})
        best = max(best, float(-res.fun))
    _ORACLE_CACHE[key] = best
    return best


def _scm_fingerprint(scm) -> str:
    bits = [scm.name]
    ref = getattr(scm, "epidemic_reference", None)
    if ref is not None:
        bits.append(hashlib.sha256(np.asarray(ref).tobytes()).hexdigest())
    for nm in scm.noise_models:
        spec = getattr(nm, "spec", None)
        bits.append(repr(spec))
    return "|".join(bits)


def compute_regret(trace: RunTrace, y_star: float, scm: GroundTruthScm,
                   draws: int = 64, tolerance: float = 0.05) -> np.ndarray:
    """Cumulative regret around noise-averaged re-evaluations of each action.

    R_t = sum_{s<=t} (y* - ybar_s); raises OracleError when any ybar_s
    exceeds y* by more than the tolerance, which flags a bad estimate.
    """
    gaps = []
    for k, row in enumerate(trace.rows):
        rng = np.random.default_rng(np.random.SeedSequence((0x7E67, k)))
        ybar = expected_reward(scm, row.action, rng, draws)
        if ybar > y_star + tolerance:
            raise OracleError(
                f"action at round {row.round} achieves {ybar:.6g} above the "
                f"oracle optimum {y_star:.6g} (tolerance {tolerance:g})")
        gaps.append(y_star - ybar)
    return np.cumsum(gaps)


@dataclass(frozen=True)
class FailureRecord:
    algorithm: str
    seed: int
    error: str
    message: str


@dataclass
class ResultBundle:
    config: ExperimentConfig
    config_hash: str
    oracle_optimum: float
    traces: list[RunTrace] = field(default_factory=list)
    regrets: dict = field(default_factory=dict)   # (algorithm, seed) -> array
    failures: list[FailureRecord] = field(default_factory=list)
    wall_clock: float = 0.0

    def trace_map(self) -> dict:
        return {(t.algorithm, t.seed): t for t in self.traces}

    def aggregate(self):
        """Per-(algorithm, round) mean/std of observed reward and mean regret.

        Rows are emitted in config algorithm order; statistics use the
        population convention so a single seed yields zero spread.
        """
        rows = []
        tm = self.trace_map()
        for alg in self.config.algorithms:
            traces = [tm[(alg, s)] for s in self.config.seeds
                      if (alg, s) in tm]
            if not traces:
                continue
            rounds = len(traces[0].rows)
            rewards = np.array([t.rewards() for t in traces])
            regs = np.array([self.regrets[(t.algorithm, t.seed)]
                             for t in traces])
            for r in range(rounds):
                rows.append((alg, r + 1,
                             float(np.mean(rewards[:, r])),
                             float(np.std(rewards[:, r])),
                             float(np.mean(regs[:, r]))))
        return rows


def _settings_for(cfg: ExperimentConfig, seed: int) -> LoopSettings:
    return LoopSettings(rounds=cfg.rounds, n_initial=cfg.initial_samples,
                        mc_paths=cfg.mc_paths,
                        mixture_components=cfg.mixture_components,
                        beta0=cfg.beta0, beta_mode=cfg.beta_mode,
                        acquisition_budget=cfg.acquisition_budget,
                        propagation_mode=cfg.propagation_mode,
                        refit_period=cfg.refit_period,
                        search_budget=cfg.search_budget,
                        seed=seed, config_hash=cfg.hash())


def build_scm(cfg: ExperimentConfig) -> GroundTruthScm:
    return make_benchmark(cfg.benchmark, cfg.noise, epidemic=cfg.epidemic)


def _run_pair(cfg: ExperimentConfig, algorithm: str, seed: int) -> RunTrace:
    scm = build_scm(cfg)
    return ALGORITHMS[algorithm](scm, _settings_for(cfg, seed))


def run_suite(cfg: ExperimentConfig, jobs: int = 1,
              scm: GroundTruthScm | None = None) -> ResultBundle:
    """Execute every (algorithm, seed) pair and attach regret traces.

    Per-pair failures are recorded without aborting the rest; the CLI
    maps a non-empty failure list to a non-zero exit. Passing an scm
    bypasses the benchmark registry (used by tests with custom systems).
    """
    t0 = time.perf_counter()
    bundle = ResultBundle(cfg, cfg.hash(), oracle_optimum=np.nan)
    base_scm = scm if scm is not None else build_scm(cfg)
    pairs = [(alg, seed) for alg in cfg.algorithms for seed in cfg.seeds]

    def one(pair):
        alg, seed = pair
        if scm is not None or jobs <= 1:
            return ALGORITHMS[alg](base_scm, _settings_for(cfg, seed))
        return _run_pair(cfg, alg, seed)

    results: dict = {}
    if jobs > 1 and scm is None:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {pool.submit(_run_pair, cfg, a, s): (a, s) for a, s in pairs}
            for fut in concurrent.futures.as_completed(futs):
                pair = futs[fut]
                try:
                    results[pair] = fut.result()
                except Exception as exc:
                    results[pair] = exc
    else:
        for pair in pairs:
            try:
                results[pair] = one(pair)
            except Exception as exc:
                results[pair] = exc

    y_star = estimate_oracle_optimum(base_scm, cfg.oracle_budget,
                                     draws=cfg.regret_draws)
    bundle.oracle_optimum = y_star
    for pair in pairs:  # canonical order regardless of completion order
        res = results[pair]
        if not isinstance(res, Exception):
            try:
                bundle.regrets[pair] = compute_regret(
                    res, y_star, base_scm, cfg.regret_draws,
                    cfg.oracle_tolerance)
                bundle.traces.append(res)
                continue
            except ExcboError as exc:
                res = exc
        bundle.failures.append(FailureRecord(
            pair[0], pair[1], type(res).__name__, str(res)))
    bundle.wall_clock = time.perf_counter() - t0
    return bundle


# ---------------------------------------------------------------------------
# Output emission.


def _atomic_write(path: str, data: str):
    directory = os.path.dirname(path) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def raw_csv_text(bundle: ResultBundle) -> str:
    n_actions = bundle.traces[0].actions().shape[1] if bundle.traces else 0
    header = (["algorithm", "seed", "round"]
              + [f"action_{i}" for i in range(n_actions)]
              + ["reward", "best_so_far", "cum_regret"])
    lines = [",".join(header)]
    tm = bundle.trace_map()
    for alg in bundle.config.algorithms:
        for seed in bundle.config.seeds:
            trace = tm.get((alg, seed))
            if trace is None:
                continue
            regret = bundle.regrets[(alg, seed)]
            for k, row in enumerate(trace.rows):
                cells = ([alg, str(seed), str(row.round)]
                         + [_fmt(a) for a in row.action]
                         + [_fmt(row.reward), _fmt(row.best_so_far),
                            _fmt(regret[k])])
                lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def aggregate_csv_text(bundle: ResultBundle) -> str:
    lines = ["algorithm,round,mean_reward,std_reward,mean_regret"]
    for alg, rnd, mean_r, std_r, mean_g in bundle.aggregate():
        lines.append(",".join([alg, str(rnd), _fmt(mean_r), _fmt(std_r),
                               _fmt(mean_g)]))
    return "\n".join(lines) + "\n"


def emit_outputs(bundle: ResultBundle, out_dir: str) -> dict:
    """Write raw CSV, aggregate CSV, SVG figure, and the JSON manifest.

    Returns {filename: path}. Never leaves partial files behind.
    """
    if not bundle.config.algorithms:
        raise ValidationError("refusing to emit outputs for an empty "
                              "algorithm set")
    os.makedirs(out_dir, exist_ok=True)
    raw = raw_csv_text(bundle)
    agg = aggregate_csv_text(bundle)
    svg = render_results_svg(bundle)

    files = {"raw.csv": raw, "aggregate.csv": agg,
             f"{bundle.config.benchmark}.svg": svg}
    hashes = {name: _sha256(text) for name, text in files.items()}
    manifest = {
        "config": bundle.config.to_dict(),
        "config_hash": bundle.config_hash,
        "oracle_optimum": bundle.oracle_optimum,
        "wall_clock_seconds": bundle.wall_clock,
        "backend": backend.active_backend(),
        "failures": [vars(f) for f in bundle.failures],
        "files": hashes,
    }
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"

    paths = {}
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        _atomic_write(path, text)
        paths[name] = path
    return paths


def load_raw_csv(path: str):
    """Read a raw CSV back into per-(algorithm, seed) column arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    runs: dict = {}
    for ln in lines[1:]:
        cells = ln.split(",")
        key = (cells[0], int(cells[1]))
        runs.setdefault(key, []).append([float(c) for c in cells[2:]])
    return header, {k: np.array(v) for k, v in runs.items()}


def verify_aggregate(raw_path: str, agg_path: str) -> bool:
    """Recompute the aggregate CSV from the raw CSV and compare bytes."""
    header, runs = load_raw_csv(raw_path)
    algorithms = []
    for alg, _ in runs:
        if alg not in algorithms:
            algorithms.append(alg)
    lines = ["algorithm,round,mean_reward,std_reward,mean_regret"]
    for alg in algorithms:
        seeds = [k for k in runs if k[0] == alg]
        rewards = np.array([runs[k][:, -3] for k in seeds])
        regrets = np.array([runs[k][:, -1] for k in seeds])
        for r in range(rewards.shape[1]):
            lines.append(",".join([
                alg, str(r + 1),
                _fmt(np.mean(rewards[:, r])), _fmt(np.std(rewards[:, r])),
                _fmt(np.mean(regrets[:, r]))]))
    recomputed = "\n".join(lines) + "\n"
    with open(agg_path, "r", encoding="utf-8") as fh:
        return fh.read() == recomputed
