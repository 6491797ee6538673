"""Experiment harness: configs, seeded runs, and figure-ready data files.

Every figure file is rebuilt from the per-seed metrics CSVs rather than from
in-memory results, so emitted tables stay derivable from the metrics alone.
"""
from __future__ import annotations

import dataclasses
import json
import multiprocessing
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .catalog import (
    Catalog,
    FileDemand,
    SyntheticDemand,
    load_catalog,
    load_demand_series,
    make_synthetic_catalog,
)
from .delay import ACTION_DELAY, OBSERVATION_DELAY, DelayConfig
from .exact import (
    DelayedDiscreteEnv,
    TINY_MDP_GAMMA,
    certify,
    enumerate_augmented,
    tiny_inventory_mdp,
    value_iteration,
)
from .metrics import (
    MetricsRow,
    MetricsWriter,
    delay_series,
    final_performance,
    moving_average,
    read_metrics,
    reward_series,
    summarize,
    write_summary,
)
from .store import ConstraintConfig, RewardParams, default_constraints
from .training import ALGORITHMS, EnvSetup, TrainConfig, tabular_q_learning, train


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class CatalogSource:
    kind: str = "synthetic"            # "synthetic" or "csv"
    n_products: int = 20
    seed: int = 0
    path: str | None = None
    demand_path: str | None = None
    forecast_mode: str = "file"

    def __post_init__(self) -> None:
        if self.kind not in ("synthetic", "csv"):
            raise ConfigError(f"unknown catalog kind {self.kind!r}")
        if self.kind == "synthetic" and self.n_products < 1:
            raise ConfigError("synthetic catalog needs n_products >= 1")
        if self.kind == "csv" and not self.path:
            raise ConfigError("csv catalog needs a path")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    catalog: CatalogSource
    delay: DelayConfig
    train: TrainConfig
    reward: RewardParams = RewardParams()
    constraints: ConstraintConfig | None = None   # None: derive from catalog
    algorithm: str = "drdqn"
    seeds: tuple = (0,)
    out_dir: str = "results"
    initial_stock_steps: int = 3

    def __post_init__(self) -> None:
        if self.initial_stock_steps < 0:
            raise ConfigError("initial_stock_steps must be >= 0")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["seeds"] = list(cfg.seeds)
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    try:
        catalog = CatalogSource(**d.pop("catalog"))
        delay = DelayConfig(**d.pop("delay"))
        train_cfg = TrainConfig(**d.pop("train"))
        reward = RewardParams(**d.pop("reward", {}))
        raw_constraints = d.pop("constraints", None)
        constraints = ConstraintConfig(**raw_constraints) if raw_constraints else None
        seeds = tuple(d.pop("seeds"))
        return ExperimentConfig(catalog=catalog, delay=delay, train=train_cfg,
                                reward=reward, constraints=constraints,
                                seeds=seeds, **d)
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config: {exc}") from exc


def config_to_json(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def config_from_json(text: str) -> ExperimentConfig:
    try:
        return config_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cfg = config_from_json(path.read_text(encoding="utf-8"))
    cfg = _resolve_paths(cfg, path.parent)
    validate_files(cfg)
    return cfg


def _resolve_paths(cfg: ExperimentConfig, base: Path) -> ExperimentConfig:
    """Make catalog paths relative to the config file work from anywhere."""
    updates = {}
    for attr in ("path", "demand_path"):
        rel = getattr(cfg.catalog, attr)
        if rel is not None and not Path(rel).is_absolute() and (base / rel).exists():
            updates[attr] = str(base / rel)
    if updates:
        cfg = dataclasses.replace(
            cfg, catalog=dataclasses.replace(cfg.catalog, **updates))
    return cfg


def validate_files(cfg: ExperimentConfig) -> None:
    """Referenced files must exist at parse time."""
    for attr in ("path", "demand_path"):
        rel = getattr(cfg.catalog, attr)
        if rel is not None and not Path(rel).exists():
            raise ConfigError(f"catalog {attr} {rel!r} does not exist")


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Apply dotted-path overrides, e.g. {"train.learning_rate": 0.003}."""
    d = config_to_dict(cfg)
    for key, value in overrides.items():
        parts = key.split(".")
        node = d
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown override path {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override key {key!r}")
        node[parts[-1]] = value
    return config_from_dict(d)


def parse_override_arg(arg: str) -> tuple[str, object]:
    """Parse a ``key=value`` override; values are JSON literals when possible."""
    if "=" not in arg:
        raise ConfigError(f"override {arg!r} must look like key=value")
    key, raw = arg.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_setup(cfg: ExperimentConfig) -> EnvSetup:
    src = cfg.catalog
    if src.kind == "synthetic":
        catalog = make_synthetic_catalog(src.n_products, src.seed)
        demand = SyntheticDemand(catalog)
    else:
        catalog = load_catalog(src.path)
        if src.demand_path:
            matrix = load_demand_series(src.demand_path, catalog)
            demand = FileDemand(matrix, forecast_mode=src.forecast_mode)
        else:
            demand = SyntheticDemand(catalog)
    constraints = cfg.constraints or default_constraints(catalog)
    return EnvSetup(catalog=catalog, constraints=constraints,
                    reward_params=cfg.reward, demand_source=demand,
                    initial_stock_steps=cfg.initial_stock_steps)


def seed_metrics_path(run_dir: Path, seed: int) -> Path:
    return run_dir / f"seed{seed:03d}.csv"


def _run_seed(cfg: ExperimentConfig, seed: int, run_dir: Path,
              save_checkpoint: bool = False) -> None:
    setup = build_setup(cfg)
    train_cfg = dataclasses.replace(cfg.train, seed=seed)
    with MetricsWriter(seed_metrics_path(run_dir, seed)) as writer:
        def on_episode(ep: int, res) -> None:
            writer.write(MetricsRow(
                run_id=cfg.name, seed=seed, episode=ep,
                delay_k=int(res.delays[ep]),
                business_reward=float(res.episode_rewards[ep]),
                sales=int(res.sales[ep]), wastage=int(res.wastage[ep]),
                unmet=int(res.unmet[ep]), holding=int(res.holding[ep]),
                epsilon=float(res.epsilons[ep]), wall_ms=float(res.wall_ms[ep])))

        result = train(setup, cfg.delay, train_cfg, cfg.algorithm,
                       on_episode=on_episode)
    if save_checkpoint:
        result.network.save(run_dir / f"seed{seed:03d}_net.npz")


def _run_seed_job(args) -> None:
    _run_seed(*args)


@dataclass
class ExperimentResult:
    run_id: str
    run_dir: Path
    seeds: tuple
    rewards: np.ndarray        # (n_seeds, episodes), sorted by seed
    delays: np.ndarray

    def finals(self, fraction: float = 0.1) -> dict[int, float]:
        return {s: final_performance(self.rewards[i], fraction)
                for i, s in enumerate(sorted(self.seeds))}


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int | None = None,
                   save_checkpoints: bool = False) -> ExperimentResult:
    """One training run per seed; incremental metrics plus a cross-seed summary."""
    out_root = Path(out_dir if out_dir is not None else cfg.out_dir)
    run_dir = out_root / cfg.name
    validate_files(cfg)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {run_dir}: {exc}") from exc
    (run_dir / "config.json").write_text(config_to_json(cfg) + "\n", encoding="utf-8")

    jobs = [(cfg, seed, run_dir, save_checkpoints) for seed in cfg.seeds]
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) == 1:
        for job in jobs:
            _run_seed_job(job)
    else:
        method = ("fork" if "fork" in multiprocessing.get_all_start_methods()
                  else "spawn")
        with multiprocessing.get_context(method).Pool(workers) as pool:
            pool.map(_run_seed_job, jobs)

    series = {s: reward_series(seed_metrics_path(run_dir, s)) for s in cfg.seeds}
    write_summary(run_dir / "summary.csv", summarize(series))
    seeds = tuple(sorted(cfg.seeds))
    rewards = np.stack([series[s] for s in seeds])
    delays = np.stack([delay_series(seed_metrics_path(run_dir, s)) for s in seeds])
    return ExperimentResult(run_id=cfg.name, run_dir=run_dir, seeds=seeds,
                            rewards=rewards, delays=delays)


def _variant(cfg: ExperimentConfig, suffix: str, algorithm: str,
             delay: DelayConfig) -> ExperimentConfig:
    return dataclasses.replace(cfg, name=f"{cfg.name}-{suffix}",
                               algorithm=algorithm, delay=delay)


def _write_csv(path: Path, header: list, rows: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(c) if isinstance(c, float) else str(c)
                              for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def figure_delay_sweep(cfg: ExperimentConfig, delays, out_dir=None,
                       workers: int | None = None) -> dict:
    """Final performance of dqn and drdqn per constant lead time."""
    delays = list(delays)
    if len(set(delays)) != len(delays) or any(d < 0 for d in delays):
        raise ConfigError("delays must be distinct non-negative integers")
    out_root = Path(out_dir if out_dir is not None else cfg.out_dir)
    results = {}
    for algorithm in ALGORITHMS:
        for d in delays:
            delay_cfg = DelayConfig(mode=ACTION_DELAY, kind="constant", k=d, k_max=d)
            sub = _variant(cfg, f"{algorithm}-act-k{d}", algorithm, delay_cfg)
            res = run_experiment(sub, out_root, workers)
            results[(algorithm, d)] = res.finals()

    table_rows, per_seed_rows = [], []
    for (algorithm, d), finals in sorted(results.items()):
        vals = np.array([finals[s] for s in sorted(finals)])
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        table_rows.append([algorithm, d, float(vals.mean()), sd])
        for s in sorted(finals):
            per_seed_rows.append([algorithm, d, s, finals[s]])
    _write_csv(out_root / "sweep.csv",
               ["algorithm", "delay", "final_mean", "final_sd"], table_rows)
    _write_csv(out_root / "sweep_per_seed.csv",
               ["algorithm", "delay", "seed", "final"], per_seed_rows)
    return results


def figure_act_vs_obs(cfg: ExperimentConfig, d: int, out_dir=None,
                      workers: int | None = None) -> dict:
    """Action-delay vs observation-delay comparison at one lead time."""
    if d < 0:
        raise ConfigError("delay must be >= 0")
    out_root = Path(out_dir if out_dir is not None else cfg.out_dir)
    modes = ((ACTION_DELAY, "act"), (OBSERVATION_DELAY, "obs"))
    results = {}
    for algorithm in ALGORITHMS:
        for mode, tag in modes:
            delay_cfg = DelayConfig(mode=mode, kind="constant", k=d, k_max=d)
            sub = _variant(cfg, f"{algorithm}-{tag}-k{d}", algorithm, delay_cfg)
            res = run_experiment(sub, out_root, workers)
            results[(algorithm, tag)] = res.finals()

    table_rows, per_seed_rows = [], []
    for (algorithm, tag), finals in sorted(results.items()):
        vals = np.array([finals[s] for s in sorted(finals)])
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        table_rows.append([algorithm, tag, float(vals.mean()), sd])
        for s in sorted(finals):
            per_seed_rows.append([algorithm, tag, s, finals[s]])
    act = np.mean(list(results[("drdqn", "act")].values()))
    obs = np.mean(list(results[("drdqn", "obs")].values()))
    denom = max(abs(act), abs(obs))
    gap = abs(act - obs) / denom if denom > 0 else 0.0
    _write_csv(out_root / "act_vs_obs.csv",
               ["algorithm", "mode", "final_mean", "final_sd"], table_rows)
    _write_csv(out_root / "act_vs_obs_per_seed.csv",
               ["algorithm", "mode", "seed", "final"], per_seed_rows)
    _write_csv(out_root / "act_vs_obs_gap.csv",
               ["drdqn_act_mean", "drdqn_obs_mean", "relative_gap"],
               [[float(act), float(obs), float(gap)]])
    return results


def figure_stochastic(cfg: ExperimentConfig, k_max: int, out_dir=None,
                      workers: int | None = None) -> dict:
    """Training curves under per-episode uniform delays, with moving averages."""
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    out_root = Path(out_dir if out_dir is not None else cfg.out_dir)
    delay_cfg = DelayConfig(mode=ACTION_DELAY, kind="stochastic", k=0, k_max=k_max)
    run_dirs = {}
    for algorithm in ALGORITHMS:
        sub = _variant(cfg, f"{algorithm}-stoch-kmax{k_max}", algorithm, delay_cfg)
        res = run_experiment(sub, out_root, workers)
        run_dirs[algorithm] = res.run_dir

    ma_rows, sampled_by_seed = [], {}
    curves: dict = {}
    for algorithm, run_dir in run_dirs.items():
        for seed_file in sorted(run_dir.glob("seed*.csv")):
            rows = read_metrics(seed_file)
            rows.sort(key=lambda r: r.episode)
            series = np.array([r.business_reward for r in rows])
            ma = moving_average(series, window=20)
            seed = rows[0].seed
            curves[(algorithm, seed)] = (series, ma)
            # Runs with equal seeds share one delay stream across algorithms,
            # so the uniformity test must count each sequence once.
            sampled_by_seed[seed] = [r.delay_k for r in rows]
            for r, m in zip(rows, ma):
                ma_rows.append([algorithm, seed, r.episode,
                                float(r.business_reward), float(m)])
    sampled = [k for seq in sampled_by_seed.values() for k in seq]
    counts = np.bincount(np.array(sampled), minlength=k_max + 1)[1:]
    chi2 = stats.chisquare(counts)
    _write_csv(out_root / "stochastic_ma.csv",
               ["algorithm", "seed", "episode", "reward", "ma20"], ma_rows)
    _write_csv(out_root / "stochastic_summary.csv",
               ["k_max", "n_sampled", "chi2_stat", "chi2_p"],
               [[k_max, int(counts.sum()), float(chi2.statistic), float(chi2.pvalue)]])
    return {"curves": curves, "chi2_p": float(chi2.pvalue), "counts": counts}


DESK_SEEDS = tuple(range(10))
DESK_CAPACITY_FRACTION = 1.0


def desk_config(name: str = "desk", seeds=DESK_SEEDS, episodes: int = 300,
                out_dir: str = "results/desk") -> ExperimentConfig:
    """Desk-scale defaults: 20 synthetic products, 100-step episodes.

    The capacity sits at the mean demand load: routine orders fit the truck
    while seasonal peaks and over-ordering still hit the cap, so the
    constraint stays occasionally active without starving the store.
    Epsilon decays over 20k of the 30k steps, leaving the training tail
    mostly greedy.
    """
    catalog = CatalogSource(kind="synthetic", n_products=20, seed=7)
    cat = make_synthetic_catalog(catalog.n_products, catalog.seed)
    return ExperimentConfig(
        name=name,
        catalog=catalog,
        constraints=default_constraints(cat, DESK_CAPACITY_FRACTION),
        delay=DelayConfig(mode=ACTION_DELAY, kind="constant", k=5, k_max=5),
        train=TrainConfig(episodes=episodes, horizon=100,
                          epsilon_decay_steps=20_000),
        algorithm="drdqn",
        seeds=tuple(seeds),
        out_dir=out_dir,
    )


def paper_scale_config(n_products: int = 220, name: str | None = None,
                       out_dir: str = "results/paper") -> ExperimentConfig:
    """Benchmark-sized stand-in: 220 (or 100) products, stochastic lead
    times up to 50 steps.  Long: hours, not minutes."""
    return ExperimentConfig(
        name=name or f"paper-{n_products}",
        catalog=CatalogSource(kind="synthetic", n_products=n_products, seed=7),
        delay=DelayConfig(mode=ACTION_DELAY, kind="stochastic", k=0, k_max=50),
        train=TrainConfig(episodes=2000, horizon=100),
        algorithm="drdqn",
        seeds=DESK_SEEDS,
        out_dir=out_dir,
    )


ORACLE_DELAYS = (0, 1, 2)


def run_oracle_suite(out_dir=None, delays=ORACLE_DELAYS, episodes: int = 3000,
                     horizon: int = 40, min_visits: int = 50, seed: int = 0):
    """Certify tabular learning against exact value iteration on the tiny MDP."""
    reports = []
    for k in delays:
        mdp = tiny_inventory_mdp()
        augmented = enumerate_augmented(mdp, k)
        solution = value_iteration(augmented, TINY_MDP_GAMMA, tol=1e-10)
        env = DelayedDiscreteEnv(mdp, k)
        rng = np.random.default_rng(seed + k)
        learned, visits = tabular_q_learning(env, TINY_MDP_GAMMA, episodes,
                                             horizon, rng, alpha=1.0, epsilon=1.0)
        report = certify(learned, solution, augmented, visits, min_visits)
        report.k = k
        reports.append(report)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        text = "\n".join(r.summary() for r in reports) + "\n"
        (out_dir / "oracle_report.txt").write_text(text, encoding="utf-8")
        rows = [[r.k, r.n_states, r.n_qualified, float(r.max_q_error),
                 float(r.q_error_bound), float(r.value_span), len(r.mismatches),
                 "pass" if r.passed else "fail",
                 ";".join(map(str, r.raw_mismatches))]
                for r in reports]
        _write_csv(out_dir / "oracle_report.csv",
                   ["k", "n_states", "n_qualified", "max_q_error", "q_error_bound",
                    "value_span", "n_mismatches", "status", "mismatch_states"], rows)
    return reports
