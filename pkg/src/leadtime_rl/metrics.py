"""CSV metrics: per-episode rows, cross-seed summaries, moving averages."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRICS_HEADER = [
    "run_id", "seed", "episode", "delay_k", "business_reward",
    "sales", "wastage", "unmet", "holding", "epsilon", "wall_ms",
]
SUMMARY_HEADER = ["episode", "n", "mean", "ci_lo", "ci_hi"]
CI_Z = 1.96


@dataclass(frozen=True)
class MetricsRow:
    run_id: str
    seed: int
    episode: int
    delay_k: int
    business_reward: float
    sales: int
    wastage: int
    unmet: int
    holding: int
    epsilon: float
    wall_ms: float

    def as_list(self) -> list:
        return [self.run_id, self.seed, self.episode, self.delay_k,
                repr(float(self.business_reward)), self.sales, self.wastage,
                self.unmet, self.holding, repr(float(self.epsilon)),
                repr(float(self.wall_ms))]


class MetricsWriter:
    """Append-only per-seed CSV stream, flushed row by row."""

    def __init__(self, path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(METRICS_HEADER)

    def write(self, row: MetricsRow) -> None:
        self._writer.writerow(row.as_list())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_metrics(path) -> list[MetricsRow]:
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header in {path}")
        for rec in reader:
            rows.append(MetricsRow(
                run_id=rec["run_id"], seed=int(rec["seed"]),
                episode=int(rec["episode"]), delay_k=int(rec["delay_k"]),
                business_reward=float(rec["business_reward"]),
                sales=int(rec["sales"]), wastage=int(rec["wastage"]),
                unmet=int(rec["unmet"]), holding=int(rec["holding"]),
                epsilon=float(rec["epsilon"]), wall_ms=float(rec["wall_ms"]),
            ))
    return rows


def reward_series(path) -> np.ndarray:
    rows = read_metrics(path)
    rows.sort(key=lambda r: r.episode)
    return np.array([r.business_reward for r in rows])


def delay_series(path) -> np.ndarray:
    rows = read_metrics(path)
    rows.sort(key=lambda r: r.episode)
    return np.array([r.delay_k for r in rows], dtype=np.int64)


def summarize(series_by_seed: dict[int, np.ndarray]) -> list[list]:
    """Per-episode mean and normal-approximation 95% interval across seeds."""
    seeds = sorted(series_by_seed)
    stacked = np.stack([series_by_seed[s] for s in seeds])
    n = stacked.shape[0]
    mean = stacked.mean(axis=0)
    if n > 1:
        half = CI_Z * stacked.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        half = np.zeros_like(mean)
    out = []
    for ep in range(stacked.shape[1]):
        out.append([ep, n, float(mean[ep]),
                    float(mean[ep] - half[ep]), float(mean[ep] + half[ep])])
    return out


def write_summary(path, rows: list[list]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for ep, n, mean, lo, hi in rows:
            writer.writerow([ep, n, repr(mean), repr(lo), repr(hi)])


def moving_average(x: np.ndarray, window: int = 20) -> np.ndarray:
    """Trailing moving average: entry e averages entries max(0, e-window+1)..e."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    csum = np.concatenate([[0.0], np.cumsum(x)])
    for e in range(len(x)):
        lo = max(0, e - window + 1)
        out[e] = (csum[e + 1] - csum[lo]) / (e + 1 - lo)
    return out


def final_performance(series: np.ndarray, fraction: float = 0.1) -> float:
    """Mean reward over the last fraction of episodes (at least one)."""
    series = np.asarray(series, dtype=np.float64)
    tail = max(1, int(round(fraction * len(series))))
    return float(series[-tail:].mean())
