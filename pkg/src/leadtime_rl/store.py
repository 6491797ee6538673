"""Multi-product store simulator.

One step: replenishment arrives into the freshest age bucket, demand is
filled FIFO (oldest stock first, unmet demand is lost), stock ages one step
and expired units become wastage.  Integer arithmetic throughout, so the
balance x(t+1) = x(t) + arrived - sales - wastage holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog

ACTION_MULTIPLIERS = np.array(
    [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0])
NUM_ACTIONS = len(ACTION_MULTIPLIERS)

DEMAND_SCALE_FACTOR = 10.0  # inventory/forecast features normalized by 10 * mean demand


@dataclass(frozen=True)
class ConstraintConfig:
    """Per-step delivery capacity: truck volume and weight."""

    max_volume: float
    max_weight: float

    def __post_init__(self) -> None:
        if not self.max_volume > 0 or not self.max_weight > 0:
            raise ValueError(
                f"capacities must be > 0, got ({self.max_volume}, {self.max_weight})")


def default_constraints(catalog: Catalog, fraction: float = 0.7) -> ConstraintConfig:
    """Capacity at a fraction of the mean per-step demand load, so it binds."""
    return ConstraintConfig(
        max_volume=fraction * float(catalog.volumes @ catalog.means),
        max_weight=fraction * float(catalog.weights @ catalog.means),
    )


@dataclass(frozen=True)
class RewardParams:
    sale_coeff: float = 1.0
    holding_coeff: float = 0.05
    wastage_coeff: float = 0.5
    stockout_coeff: float = 0.25

    def __post_init__(self) -> None:
        for name in ("sale_coeff", "holding_coeff", "wastage_coeff", "stockout_coeff"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass
class StoreState:
    """Age-bucketed on-hand stock.

    ``stock[i, a]`` is the integer quantity of product i with remaining life
    ``shelf_life_i - a``; columns at or beyond the product's shelf life stay
    zero.
    """

    time: int
    stock: np.ndarray

    @classmethod
    def empty(cls, catalog: Catalog) -> "StoreState":
        return cls(time=0, stock=np.zeros((catalog.n, catalog.max_shelf_life), dtype=np.int64))

    @classmethod
    def steady(cls, catalog: Catalog, typical, steps: int) -> "StoreState":
        """Store already in operation: one typical demand per age bucket.

        Staggered ages expire progressively like steady-state stock would,
        so episodes start neither starved nor with a wastage spike.
        """
        state = cls.empty(catalog)
        if steps <= 0:
            return state
        per_bucket = np.rint(np.asarray(typical, dtype=np.float64)).astype(np.int64)
        for i in range(catalog.n):
            depth = min(int(catalog.shelf_lives[i]), steps)
            state.stock[i, :depth] = per_bucket[i]
        return state

    def on_hand(self) -> np.ndarray:
        return self.stock.sum(axis=1)


@dataclass
class StepOutcome:
    """Per-product step accounting (all integer vectors)."""

    arrived: np.ndarray
    demand: np.ndarray
    sales: np.ndarray
    unmet: np.ndarray
    wastage: np.ndarray
    holding: np.ndarray


def decode_action(action_index: int, forecast_i: float) -> int:
    """Map a discrete action to an order quantity: a forecast multiple."""
    if not 0 <= action_index < NUM_ACTIONS:
        raise ValueError(f"action index must be in [0, {NUM_ACTIONS - 1}], got {action_index}")
    if forecast_i < 0:
        raise ValueError(f"forecast must be >= 0, got {forecast_i}")
    return int(np.rint(ACTION_MULTIPLIERS[action_index] * forecast_i))


def decode_actions(action_indices: np.ndarray, forecasts: np.ndarray) -> np.ndarray:
    """Vectorized decode_action."""
    idx = np.asarray(action_indices)
    if ((idx < 0) | (idx >= NUM_ACTIONS)).any():
        raise ValueError(f"action indices must be in [0, {NUM_ACTIONS - 1}]")
    return np.rint(ACTION_MULTIPLIERS[idx] * forecasts).astype(np.int64)


def project_actions(quantities, catalog: Catalog,
                    constraints: ConstraintConfig) -> np.ndarray:
    """Scale order quantities down so the volume and weight capacities hold.

    Uniform scaling by rho = min(1, Vmax/Vol, Cmax/Wt) with floor rounding,
    so feasible inputs pass through unchanged and no quantity ever grows.
    """
    q = np.asarray(quantities, dtype=np.int64)
    if (q < 0).any():
        raise ValueError("quantities must be >= 0")
    vol = float(catalog.volumes @ q)
    wt = float(catalog.weights @ q)
    rho = 1.0
    if vol > constraints.max_volume:
        rho = min(rho, constraints.max_volume / vol)
    if wt > constraints.max_weight:
        rho = min(rho, constraints.max_weight / wt)
    if rho >= 1.0:
        return q.copy()
    out = np.floor(rho * q).astype(np.int64)
    # Float-rounding safeguard; the scaling above already makes this a no-op
    # in practice.
    while (catalog.volumes @ out > constraints.max_volume
           or catalog.weights @ out > constraints.max_weight):
        i = int(np.argmax(out))
        if out[i] == 0:
            break
        out[i] -= 1
    return out


def step(state: StoreState, arriving, demand, catalog: Catalog
         ) -> tuple[StoreState, StepOutcome]:
    """Advance the store one step: arrivals, FIFO sales, aging, wastage."""
    arriving = np.asarray(arriving, dtype=np.int64)
    demand = np.asarray(demand, dtype=np.int64)
    if (arriving < 0).any() or (demand < 0).any():
        raise ValueError("arriving and demand must be >= 0")
    n, tmax = state.stock.shape

    stock = state.stock.copy()
    stock[:, 0] += arriving

    # FIFO: bucket a sells only what older buckets (larger a) left unfilled.
    csum = np.cumsum(stock, axis=1)
    older = csum[:, -1:] - csum
    sold = np.clip(demand[:, None] - older, 0, stock)
    stock -= sold
    sales = sold.sum(axis=1)
    unmet = demand - sales

    # Age one step; units whose remaining life reaches zero expire.
    shifted = np.zeros((n, tmax + 1), dtype=np.int64)
    shifted[:, 1:] = stock
    expired = np.arange(tmax + 1)[None, :] >= catalog.shelf_lives[:, None]
    wastage = np.where(expired, shifted, 0).sum(axis=1)
    new_stock = np.where(expired[:, :tmax], 0, shifted[:, :tmax])
    holding = new_stock.sum(axis=1)

    outcome = StepOutcome(arrived=arriving.copy(), demand=demand.copy(),
                          sales=sales, unmet=unmet, wastage=wastage, holding=holding)
    return StoreState(time=state.time + 1, stock=new_stock), outcome


def step_rewards(outcome: StepOutcome, forecasts, params: RewardParams) -> np.ndarray:
    """Per-product reward, normalized by forecast so products are comparable."""
    forecasts = np.asarray(forecasts, dtype=np.float64)
    if (forecasts < 0).any():
        raise ValueError("forecasts must be >= 0")
    num = (params.sale_coeff * outcome.sales
           - params.holding_coeff * outcome.holding
           - params.wastage_coeff * outcome.wastage
           - params.stockout_coeff * outcome.unmet)
    return num / np.maximum(1.0, forecasts)


def business_reward(outcome: StepOutcome, forecasts, params: RewardParams) -> float:
    """The scalar step metric: mean per-product reward."""
    return float(step_rewards(outcome, forecasts, params).mean())


@dataclass(frozen=True)
class FeatureScales:
    """Fixed normalizers so every feature stays O(1) without running stats."""

    demand: np.ndarray      # per product: 10 * mean demand
    volume: float           # catalog max unit volume
    weight: float           # catalog max unit weight
    shelf: float            # catalog max shelf life
    agg_volume: float       # volume capacity
    agg_weight: float       # weight capacity

    @classmethod
    def for_catalog(cls, catalog: Catalog, constraints: ConstraintConfig) -> "FeatureScales":
        return cls(
            demand=DEMAND_SCALE_FACTOR * catalog.means,
            volume=float(catalog.volumes.max()),
            weight=float(catalog.weights.max()),
            shelf=float(catalog.shelf_lives.max()),
            agg_volume=constraints.max_volume,
            agg_weight=constraints.max_weight,
        )


NUM_BASE_FEATURES = 7


def feature_matrix(on_hand, forecasts, catalog: Catalog,
                   scales: FeatureScales) -> np.ndarray:
    """(n, 7) normalized features per product.

    Columns: on-hand, forecast, unit volume, unit weight, shelf life, and the
    two catalog-wide aggregates (forecast volume and weight), identical in
    every row.
    """
    on_hand = np.asarray(on_hand, dtype=np.float64)
    forecasts = np.asarray(forecasts, dtype=np.float64)
    out = np.empty((catalog.n, NUM_BASE_FEATURES), dtype=np.float64)
    out[:, 0] = on_hand / scales.demand
    out[:, 1] = forecasts / scales.demand
    out[:, 2] = catalog.volumes / scales.volume
    out[:, 3] = catalog.weights / scales.weight
    out[:, 4] = catalog.shelf_lives / scales.shelf
    out[:, 5] = float(catalog.volumes @ forecasts) / scales.agg_volume
    out[:, 6] = float(catalog.weights @ forecasts) / scales.agg_weight
    return out


def build_features(i: int, state: StoreState, forecasts, catalog: Catalog,
                   constraints: ConstraintConfig) -> np.ndarray:
    """Feature vector for one product (row i of the feature matrix)."""
    if not 0 <= i < catalog.n:
        raise ValueError(f"product index {i} out of range")
    scales = FeatureScales.for_catalog(catalog, constraints)
    return feature_matrix(state.on_hand(), forecasts, catalog, scales)[i]
