"""Experiment harness: configs, seeded runs, aggregation, and CSV export.

Every (algorithm, seed) pair is an independent task with its own random
streams derived from (base_seed, purpose tag, seed index), so results are
identical whether tasks run serially or in a process pool, and all
algorithms at a given seed face the same environment tapes and the same
network initialization. Aggregated CSVs carry content hashes of the
resolved config in comment lines and print floats with 10 significant
digits, which makes repeated runs byte-comparable.
"""

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import t as student_t

from .algorithms import ALGORITHMS, AlgorithmConfig, make_algorithm
from .environments import REWARD_KINDS, make_env

log = logging.getLogger(__name__)

_ENV_TAG = 101
_ALG_TAG = 211
CI_LEVEL = 0.96
SWEEP_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass
class EnvConfig:
    kind: str = "h1"
    d: int = 20
    K: int = 5
    T: int = 2000
    dataset_path: str = None


@dataclass
class AlgorithmSpec:
    name: str
    config: AlgorithmConfig = field(default_factory=AlgorithmConfig)


@dataclass
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    algorithms: list = field(default_factory=list)
    repeats: int = 10
    base_seed: int = 0
    input_hash: str = None  # sha1 of the raw inputs, set at load time

    def config_hash(self) -> str:
        payload = asdict(self)
        payload.pop("input_hash")
        canon = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()

    def resolved_input_hash(self) -> str:
        if self.input_hash is not None:
            return self.input_hash
        payload = asdict(self)
        payload.pop("input_hash")
        canon = json.dumps(payload, sort_keys=True)
        return hashlib.sha1(canon.encode()).hexdigest()


def _build_algorithm_spec(entry: dict) -> AlgorithmSpec:
    entry = dict(entry)
    name = entry.pop("name", None)
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    known = {f for f in AlgorithmConfig.__dataclass_fields__}
    unknown = set(entry) - known
    if unknown:
        raise ValueError(f"unknown algorithm options {sorted(unknown)} for {name}")
    return AlgorithmSpec(name, AlgorithmConfig(**entry))


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    env_raw = dict(raw.pop("env", {}))
    kind = env_raw.get("kind", "h1")
    if kind not in REWARD_KINDS + ("dataset",):
        raise ValueError(f"unknown environment kind {kind!r}")
    env = EnvConfig(**env_raw)
    algorithms = [_build_algorithm_spec(e) for e in raw.pop("algorithms", [])]
    if not algorithms:
        raise ValueError("config lists no algorithms")
    names = [spec.name for spec in algorithms]
    if len(set(names)) != len(names):
        raise ValueError("algorithm names must be unique within one experiment")
    cfg = ExperimentConfig(env=env, algorithms=algorithms, **raw)
    if cfg.repeats < 1:
        raise ValueError("repeats must be at least 1")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read a TOML or JSON experiment description."""
    with open(path, "rb") as fh:
        blob = fh.read()
    text = blob.decode()
    if str(path).endswith(".json"):
        raw = json.loads(text)
    else:
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text)
    cfg = config_from_dict(raw)
    sha = hashlib.sha1(blob)
    if cfg.env.dataset_path:
        with open(cfg.env.dataset_path, "rb") as fh:
            sha.update(fh.read())
    cfg.input_hash = sha.hexdigest()
    return cfg


def _single_run(env_cfg: EnvConfig, name: str, alg_cfg: AlgorithmConfig,
                seed_index: int, base_seed: int):
    env = make_env(
        env_cfg.kind, env_cfg.d, env_cfg.K, env_cfg.T,
        [base_seed, _ENV_TAG, seed_index], env_cfg.dataset_path,
    )
    algo = make_algorithm(name, env.dim, alg_cfg, [base_seed, _ALG_TAG, seed_index])
    cum = np.empty(env.T)
    total = 0.0
    for t in range(1, env.T + 1):
        arms, logits = env.round(t)
        if algo.needs_logits:
            idx = algo.select_from_logits(logits)
        else:
            idx = algo.select_arm(arms)
        algo.observe(arms[idx], env.sample_reward(idx, t), t)
        total += env.regret_of(idx, t)
        cum[t - 1] = total
    return cum, env.kappa_star()


def _run_task(args):
    alg_index, seed_index, env_cfg, name, alg_cfg, base_seed = args
    cum, kappa_star = _single_run(env_cfg, name, alg_cfg, seed_index, base_seed)
    return alg_index, seed_index, cum, kappa_star


@dataclass
class RunResult:
    config: ExperimentConfig
    per_seed: dict  # name -> (repeats, T) cumulative regret
    kappa_star: dict  # name -> (repeats,)
    wall_time: float

    def mean_regret(self, name: str) -> np.ndarray:
        return self.per_seed[name].mean(axis=0)


def _map_tasks(tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_task, tasks))
    return [_run_task(t) for t in tasks]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> RunResult:
    """Run every algorithm over `repeats` seeded environments."""
    start = time.perf_counter()
    tasks = [
        (ai, si, config.env, spec.name, spec.config, config.base_seed)
        for ai, spec in enumerate(config.algorithms)
        for si in range(config.repeats)
    ]
    per_seed = {
        spec.name: np.empty((config.repeats, config.env.T))
        for spec in config.algorithms
    }
    kappa_star = {spec.name: np.empty(config.repeats) for spec in config.algorithms}
    for ai, si, cum, ks in _map_tasks(tasks, workers):
        name = config.algorithms[ai].name
        per_seed[name][si] = cum
        kappa_star[name][si] = ks
    elapsed = time.perf_counter() - start
    for spec in config.algorithms:
        log.info(
            "%s: final regret %.4f, kappa* %.4g, %d seeds",
            spec.name, per_seed[spec.name][:, -1].mean(),
            kappa_star[spec.name].mean(), config.repeats,
        )
    return RunResult(config, per_seed, kappa_star, elapsed)


def _ci_halfwidth(values: np.ndarray) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    crit = float(student_t.ppf(0.5 + CI_LEVEL / 2.0, n - 1))
    return crit * float(values.std(ddof=1)) / math.sqrt(n)


def export_csv(result: RunResult, path) -> None:
    """Aggregated regret curves, plus a per-seed long-format companion file."""
    cfg = result.config
    lines = [
        f"# config_hash=sha256:{cfg.config_hash()}",
        f"# input_hash=sha1:{cfg.resolved_input_hash()}",
        "round,algorithm,mean_cum_regret,ci_low,ci_high",
    ]
    for spec in cfg.algorithms:
        curves = result.per_seed[spec.name]
        means = curves.mean(axis=0)
        for t in range(cfg.env.T):
            hw = _ci_halfwidth(curves[:, t])
            lines.append(
                f"{t + 1},{spec.name},{means[t]:.10g},"
                f"{means[t] - hw:.10g},{means[t] + hw:.10g}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    companion = _companion_path(path)
    lines = [
        f"# config_hash=sha256:{cfg.config_hash()}",
        f"# input_hash=sha1:{cfg.resolved_input_hash()}",
        "round,algorithm,seed,cum_regret",
    ]
    for spec in cfg.algorithms:
        curves = result.per_seed[spec.name]
        for si in range(cfg.repeats):
            for t in range(cfg.env.T):
                lines.append(f"{t + 1},{spec.name},{si},{curves[si, t]:.10g}")
    with open(companion, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _companion_path(path) -> str:
    path = str(path)
    if path.endswith(".csv"):
        return path[: -len(".csv")] + "_seeds.csv"
    return path + "_seeds"


def _sweep_task(args):
    key, env_cfg, name, alg_cfg, seed_index, base_seed = args
    cum, _ = _single_run(env_cfg, name, alg_cfg, seed_index, base_seed)
    return key, cum[-1]


@dataclass
class SweepResult:
    rows: list  # (algorithm, nu, lam, final_mean_regret)
    best: dict  # algorithm -> (nu, lam)


def sweep(config: ExperimentConfig, nus=SWEEP_GRID, lams=SWEEP_GRID,
          workers: int = 1) -> SweepResult:
    """Grid-search (nu, lambda) per algorithm by final mean cumulative regret.

    Ties prefer the smaller nu, then the smaller lambda.
    """
    nus = sorted(float(v) for v in nus)
    lams = sorted(float(v) for v in lams)
    tasks = []
    for ai, spec in enumerate(config.algorithms):
        for nu in nus:
            for lam in lams:
                alg_cfg = replace(spec.config, nu=nu, lam=lam)
                for si in range(config.repeats):
                    tasks.append(
                        ((ai, nu, lam, si), config.env, spec.name, alg_cfg,
                         si, config.base_seed)
                    )
    finals = {}
    for key, final in _map_tasks_sweep(tasks, workers):
        finals[key] = final
    rows, best = [], {}
    for ai, spec in enumerate(config.algorithms):
        scored = []
        for nu in nus:
            for lam in lams:
                mean_final = float(
                    np.mean([finals[(ai, nu, lam, si)] for si in range(config.repeats)])
                )
                rows.append((spec.name, nu, lam, mean_final))
                scored.append((mean_final, nu, lam))
        best[spec.name] = min(scored)[1:]
    return SweepResult(rows, best)


def _map_tasks_sweep(tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]


def export_sweep_csv(result: SweepResult, path) -> None:
    lines = ["algorithm,nu,lambda,final_mean_regret,selected"]
    for name, nu, lam, final in result.rows:
        sel = int(result.best[name] == (nu, lam))
        lines.append(f"{name},{nu:.10g},{lam:.10g},{final:.10g},{sel}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
