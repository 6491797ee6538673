"""Product catalog, demand models, and CSV ingestion.

The catalog fixes the per-product metadata (volume, weight, shelf life) and
the parameters of a seasonal demand model.  Demand can come either from the
closed-form synthetic model or from a per-step demand series file.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CATALOG_HEADER = [
    "id", "unit_volume", "unit_weight", "shelf_life", "demand_mean",
    "season_amp", "season_period", "phase", "noise_sd",
]

# Parameter ranges for synthetic catalogs.
SYNTH_MEAN_RANGE = (2.0, 20.0)
SYNTH_AMP_RANGE = (0.0, 0.5)
SYNTH_PERIODS = (10, 20, 30)
SYNTH_NOISE_FRACTION = 0.3          # noise sd drawn from [0, 0.3 * mean]
SYNTH_VOLUME_RANGE = (0.2, 2.0)
SYNTH_WEIGHT_RANGE = (0.1, 1.0)
SYNTH_SHELF_RANGE = (3, 15)         # inclusive
CAPACITY_FRACTION = 0.7             # truck capacity as share of mean demand load


class CatalogError(ValueError):
    """A catalog or demand file violates the schema or an invariant."""


@dataclass(frozen=True)
class Product:
    """Immutable per-product metadata and demand-model parameters."""

    id: int
    unit_volume: float
    unit_weight: float
    shelf_life: int
    demand_mean: float
    demand_season_amp: float = 0.0
    demand_season_period: int = 20
    demand_phase: float = 0.0
    demand_noise_sd: float = 0.0

    def __post_init__(self) -> None:
        if not self.unit_volume > 0:
            raise CatalogError(f"unit_volume must be > 0, got {self.unit_volume}")
        if not self.unit_weight > 0:
            raise CatalogError(f"unit_weight must be > 0, got {self.unit_weight}")
        if int(self.shelf_life) != self.shelf_life or self.shelf_life < 1:
            raise CatalogError(f"shelf_life must be an integer >= 1, got {self.shelf_life}")
        if not self.demand_mean > 0:
            raise CatalogError(f"demand_mean must be > 0, got {self.demand_mean}")
        if not 0.0 <= self.demand_season_amp < 1.0:
            raise CatalogError(
                f"season_amp must be in [0, 1), got {self.demand_season_amp}")
        if self.demand_season_period < 1:
            raise CatalogError(
                f"season_period must be >= 1, got {self.demand_season_period}")
        if self.demand_noise_sd < 0:
            raise CatalogError(f"noise_sd must be >= 0, got {self.demand_noise_sd}")


class Catalog:
    """A fixed product list plus cached parameter arrays for vector math."""

    def __init__(self, products) -> None:
        products = tuple(products)
        if not products:
            raise CatalogError("empty catalog")
        self.products = products
        self.n = len(products)
        self.volumes = np.array([p.unit_volume for p in products], dtype=np.float64)
        self.weights = np.array([p.unit_weight for p in products], dtype=np.float64)
        self.shelf_lives = np.array([p.shelf_life for p in products], dtype=np.int64)
        self.means = np.array([p.demand_mean for p in products], dtype=np.float64)
        self.amps = np.array([p.demand_season_amp for p in products], dtype=np.float64)
        self.periods = np.array([p.demand_season_period for p in products], dtype=np.float64)
        self.phases = np.array([p.demand_phase for p in products], dtype=np.float64)
        self.noise_sds = np.array([p.demand_noise_sd for p in products], dtype=np.float64)
        self.max_shelf_life = int(self.shelf_lives.max())

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.products)

    def __eq__(self, other) -> bool:
        return isinstance(other, Catalog) and self.products == other.products


def seasonal_mean(catalog: Catalog, t: int) -> np.ndarray:
    """Deterministic demand component at step t, clamped at zero."""
    wave = np.sin(2.0 * np.pi * t / catalog.periods + catalog.phases)
    return np.maximum(0.0, catalog.means * (1.0 + catalog.amps * wave))


def forecast(catalog: Catalog, t: int) -> np.ndarray:
    """Single-step demand forecast: the deterministic model component."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return seasonal_mean(catalog, t)


def generate_demand(catalog: Catalog, t: int, rng: np.random.Generator) -> np.ndarray:
    """Integer demand at step t: rounded noisy seasonal model, floored at 0.

    Ties round to even (numpy rint convention).
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    wave = np.sin(2.0 * np.pi * t / catalog.periods + catalog.phases)
    raw = catalog.means * (1.0 + catalog.amps * wave)
    raw = raw + rng.normal(0.0, catalog.noise_sds)
    return np.maximum(0, np.rint(raw)).astype(np.int64)


def make_synthetic_catalog(n: int, rng: np.random.Generator | int) -> Catalog:
    """Draw n products from the documented parameter ranges."""
    if n < 1:
        raise CatalogError(f"catalog needs at least one product, got n={n}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    means = rng.uniform(*SYNTH_MEAN_RANGE, size=n)
    amps = rng.uniform(*SYNTH_AMP_RANGE, size=n)
    periods = rng.choice(SYNTH_PERIODS, size=n)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    noise_sds = rng.uniform(0.0, SYNTH_NOISE_FRACTION, size=n) * means
    volumes = rng.uniform(*SYNTH_VOLUME_RANGE, size=n)
    weights = rng.uniform(*SYNTH_WEIGHT_RANGE, size=n)
    shelf = rng.integers(SYNTH_SHELF_RANGE[0], SYNTH_SHELF_RANGE[1] + 1, size=n)
    return Catalog(
        Product(
            id=i,
            unit_volume=float(volumes[i]),
            unit_weight=float(weights[i]),
            shelf_life=int(shelf[i]),
            demand_mean=float(means[i]),
            demand_season_amp=float(amps[i]),
            demand_season_period=int(periods[i]),
            demand_phase=float(phases[i]),
            demand_noise_sd=float(noise_sds[i]),
        )
        for i in range(n)
    )


def _parse_field(raw: str, column: str, row_num: int, caster):
    try:
        return caster(raw)
    except ValueError:
        raise CatalogError(
            f"row {row_num}, column {column}: cannot parse {raw!r}") from None


def load_catalog(path) -> Catalog:
    """Read a catalog CSV, validating every row against the Product invariants.

    Errors name the offending row (1-based, excluding the header) and column.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CatalogError("empty catalog") from None
        if [h.strip() for h in header] != CATALOG_HEADER:
            raise CatalogError(
                f"bad catalog header {header!r}, expected {CATALOG_HEADER!r}")
        products = []
        for row_num, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CATALOG_HEADER):
                raise CatalogError(
                    f"row {row_num}: expected {len(CATALOG_HEADER)} fields, got {len(row)}")
            cells = dict(zip(CATALOG_HEADER, (c.strip() for c in row)))
            try:
                products.append(Product(
                    id=_parse_field(cells["id"], "id", row_num, int),
                    unit_volume=_parse_field(cells["unit_volume"], "unit_volume", row_num, float),
                    unit_weight=_parse_field(cells["unit_weight"], "unit_weight", row_num, float),
                    shelf_life=_parse_field(cells["shelf_life"], "shelf_life", row_num, int),
                    demand_mean=_parse_field(cells["demand_mean"], "demand_mean", row_num, float),
                    demand_season_amp=_parse_field(cells["season_amp"], "season_amp", row_num, float),
                    demand_season_period=_parse_field(cells["season_period"], "season_period", row_num, int),
                    demand_phase=_parse_field(cells["phase"], "phase", row_num, float),
                    demand_noise_sd=_parse_field(cells["noise_sd"], "noise_sd", row_num, float),
                ))
            except CatalogError as exc:
                if str(exc).startswith("row "):
                    raise
                raise CatalogError(f"row {row_num}: {exc}") from None
    if not products:
        raise CatalogError("empty catalog")
    return Catalog(products)


def load_demand_series(path, catalog: Catalog | None = None) -> np.ndarray:
    """Read a demand series CSV with header ``t,<id0>,<id1>,...``.

    Returns a (steps, products) integer matrix.  When a catalog is given the
    id columns must match its product ids in order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CatalogError("empty demand series") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise CatalogError(f"demand series header must start with 't', got {header!r}")
        ids = [_parse_field(h, "header", 0, int) for h in header[1:]]
        if catalog is not None and ids != [p.id for p in catalog.products]:
            raise CatalogError(
                f"demand series ids {ids} do not match catalog ids")
        rows = []
        for row_num, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise CatalogError(
                    f"row {row_num}: expected {len(header)} fields, got {len(row)}")
            _parse_field(row[0], "t", row_num, int)
            vals = []
            for col, cell in zip(header[1:], row[1:]):
                v = _parse_field(cell.strip(), col, row_num, int)
                if v < 0:
                    raise CatalogError(f"row {row_num}, column {col}: demand must be >= 0")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise CatalogError("empty demand series")
    return np.array(rows, dtype=np.int64)


class SyntheticDemand:
    """Demand source backed by the closed-form seasonal model."""

    def __init__(self, catalog: Catalog) -> None:
        self.catalog = catalog

    def demand(self, t: int, rng: np.random.Generator) -> np.ndarray:
        return generate_demand(self.catalog, t, rng)

    def forecast(self, t: int) -> np.ndarray:
        return forecast(self.catalog, t)

    def typical(self) -> np.ndarray:
        return self.catalog.means.copy()


class FileDemand:
    """Demand source replaying a loaded (steps, products) matrix.

    Steps beyond the file wrap around.  The forecast is the same-step file
    column ("file" mode, a perfect one-step forecast) or a trailing moving
    average of past rows ("moving_average" mode; the column mean seeds t=0).
    """

    def __init__(self, matrix: np.ndarray, forecast_mode: str = "file",
                 ma_window: int = 5) -> None:
        matrix = np.asarray(matrix, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] < 1:
            raise CatalogError("demand matrix must be 2-D with at least one row")
        if (matrix < 0).any():
            raise CatalogError("demand matrix must be non-negative")
        if forecast_mode not in ("file", "moving_average"):
            raise ValueError(f"unknown forecast_mode {forecast_mode!r}")
        self.matrix = matrix
        self.forecast_mode = forecast_mode
        self.ma_window = int(ma_window)
        self._col_means = matrix.mean(axis=0)

    def demand(self, t: int, rng: np.random.Generator) -> np.ndarray:
        return self.matrix[t % self.matrix.shape[0]].copy()

    def forecast(self, t: int) -> np.ndarray:
        if self.forecast_mode == "file":
            return self.matrix[t % self.matrix.shape[0]].astype(np.float64)
        if t == 0:
            return self._col_means.copy()
        idx = np.arange(max(0, t - self.ma_window), t) % self.matrix.shape[0]
        return self.matrix[idx].mean(axis=0)

    def typical(self) -> np.ndarray:
        return self._col_means.copy()
