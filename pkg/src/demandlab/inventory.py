"""Newsvendor order-up-to levels for the restaurant.

Four variants: intra-day ("5-time") and daily plans from trailing historical
statistics, and the same two horizons driven by forecasts. Historical plans
use rolling statistics (a global estimate would give a constant plan with
zero variance); forecast plans use the trailing dispersion of realized
forecast errors as the safety-stock sigma.
"""

from dataclasses import dataclass, field

import numpy as np

from demandlab.simulation.config import SLOTS

VARIANTS = ("5-time", "daily", "5-time-lstm", "daily-lstm")


class InventoryError(ValueError):
    pass


@dataclass
class DemandStats:
    mean: float
    sd: float
    granularity: str  # "slot" | "daily"
    source: str  # "historical" | "forecast"
    window_days: int = 0

    def __post_init__(self):
        if self.sd < 0:
            raise InventoryError("sd must be >= 0")
        if self.source == "historical" and self.window_days < 2:
            raise InventoryError("historical stats need a window of >= 2 days")


@dataclass
class NewsvendorParams:
    z_score: float = 1.96
    correlation: float = 0.0

    def __post_init__(self):
        if self.z_score <= 0:
            raise InventoryError("z_score must be > 0")
        if not -1.0 <= self.correlation <= 1.0:
            raise InventoryError("correlation must lie in [-1, 1]")


@dataclass
class InventoryPlan:
    """Time-indexed order-up-to series for one variant."""

    variant: str
    days: np.ndarray  # absolute day index per entry
    slots: np.ndarray  # slot index per entry, or -1 for daily variants
    mu: np.ndarray
    sigma: np.ndarray
    q_star: np.ndarray

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InventoryError(f"unknown variant {self.variant!r}")
        for name in ("days", "slots", "mu", "sigma", "q_star"):
            setattr(self, name, np.asarray(getattr(self, name)))
        if np.any(self.q_star < 0):
            raise InventoryError("order-up-to levels must be >= 0")

    def __len__(self):
        return len(self.q_star)

    def to_csv(self, path, dates=None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("timestamp,variant,mu,sigma,q_star\n")
            for i in range(len(self)):
                day = int(self.days[i])
                stamp = dates[day].isoformat() if dates is not None else str(day)
                if int(self.slots[i]) >= 0:
                    stamp += "/" + SLOTS[int(self.slots[i])]
                fh.write(f"{stamp},{self.variant},{self.mu[i]:.6f},"
                         f"{self.sigma[i]:.6f},{self.q_star[i]:.6f}\n")


def combined_sd(sigma_z: float, sigma_s: float, rho: float) -> float:
    """Standard deviation of the summed platform demands given their correlation."""
    if sigma_z < 0 or sigma_s < 0:
        raise InventoryError("sigmas must be >= 0")
    if not -1.0 <= rho <= 1.0:
        raise InventoryError("rho must lie in [-1, 1]")
    value = sigma_z**2 + sigma_s**2 + 2.0 * rho * sigma_z * sigma_s
    return float(np.sqrt(max(value, 0.0)))


def q_star(mu: float, sigma: float, z: float) -> float:
    """Order-up-to level: mean demand plus z safety-factor times sigma, floored at 0."""
    if sigma < 0:
        raise InventoryError("sigma must be >= 0")
    return max(mu + z * sigma, 0.0)


def estimate_correlation(series_a, series_b) -> float:
    """Pearson correlation coefficient; rejects constant or mismatched series."""
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise InventoryError("need two equal-length series with at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da)) * np.sqrt(np.sum(db * db))
    if denom == 0.0:
        raise InventoryError("correlation undefined for a constant series")
    return float(np.clip(np.sum(da * db) / denom, -1.0, 1.0))


def slot_stats(demand_z: np.ndarray, demand_s: np.ndarray, day: int, slot: int,
               window_days: int) -> DemandStats:
    """Trailing-window mean/sd of total (both-platform) demand for one slot.

    Per-platform sds are combined through the correlation estimated on the
    same window; a constant platform series contributes zero covariance.
    """
    demand_z = np.asarray(demand_z, dtype=float)
    demand_s = np.asarray(demand_s, dtype=float)
    if window_days < 2:
        raise InventoryError("window_days must be >= 2")
    if day < window_days:
        raise InventoryError(f"day {day} has less than {window_days} days of history")
    hz = demand_z[day - window_days:day, slot]
    hs = demand_s[day - window_days:day, slot]
    sd_z = float(np.std(hz))
    sd_s = float(np.std(hs))
    if sd_z == 0.0 or sd_s == 0.0:
        rho = 0.0
    else:
        rho = estimate_correlation(hz, hs)
    return DemandStats(
        mean=float(np.mean(hz + hs)),
        sd=combined_sd(sd_z, sd_s, rho),
        granularity="slot",
        source="historical",
        window_days=window_days,
    )


def daily_stats(slot_statistics) -> DemandStats:
    """Daily stats from the five slot stats: mean of means and mean of sds."""
    stats = list(slot_statistics)
    if len(stats) != len(SLOTS):
        raise InventoryError(f"need exactly {len(SLOTS)} slot stats, got {len(stats)}")
    return DemandStats(
        mean=float(np.mean([s.mean for s in stats])),
        sd=float(np.mean([s.sd for s in stats])),
        granularity="daily",
        source=stats[0].source,
        window_days=stats[0].window_days,
    )


def plan_from_history(demand_z: np.ndarray, demand_s: np.ndarray, variant: str,
                      params: NewsvendorParams, window_days: int) -> InventoryPlan:
    """Per-slot or per-day order-up-to series from trailing statistics."""
    if variant not in ("5-time", "daily"):
        raise InventoryError(f"historical plan variant must be 5-time or daily, got {variant!r}")
    demand_z = np.asarray(demand_z, dtype=float)
    demand_s = np.asarray(demand_s, dtype=float)
    n_days = demand_z.shape[0]
    if n_days <= window_days:
        raise InventoryError(f"need more than {window_days} days of history, got {n_days}")
    days, slots, mus, sigmas, qs = [], [], [], [], []
    for day in range(window_days, n_days):
        per_slot = [slot_stats(demand_z, demand_s, day, slot, window_days)
                    for slot in range(len(SLOTS))]
        if variant == "5-time":
            for slot, stats in enumerate(per_slot):
                days.append(day)
                slots.append(slot)
                mus.append(stats.mean)
                sigmas.append(stats.sd)
                qs.append(q_star(stats.mean, stats.sd, params.z_score))
        else:
            stats = daily_stats(per_slot)
            days.append(day)
            slots.append(-1)
            mus.append(stats.mean)
            sigmas.append(stats.sd)
            qs.append(q_star(stats.mean, stats.sd, params.z_score))
    return InventoryPlan(variant, np.array(days), np.array(slots), np.array(mus),
                         np.array(sigmas), np.array(qs))


def _trailing_error_sd(errors: np.ndarray, index: int, window: int) -> float:
    """Population sd of the last `window` errors strictly before `index`; 0 when <2 exist."""
    history = errors[max(0, index - window):index]
    if len(history) < 2:
        return 0.0
    return float(np.std(history))


def plan_from_forecast(forecasts: np.ndarray, actuals: np.ndarray, variant: str,
                       params: NewsvendorParams, window_days: int,
                       days=None) -> InventoryPlan:
    """Order-up-to series from forecasts plus trailing realized-error dispersion.

    Slot variant expects [n x 5] forecast/actual arrays; the daily variant
    accepts either daily series or [n x 5] slot arrays, which are averaged
    into daily forecasts first.
    """
    forecasts = np.asarray(forecasts, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if forecasts.shape != actuals.shape:
        raise InventoryError(f"forecast/actual misalignment: {forecasts.shape} "
                             f"vs {actuals.shape}")
    if variant not in ("5-time-lstm", "daily-lstm"):
        raise InventoryError(f"forecast plan variant must be *-lstm, got {variant!r}")
    n = forecasts.shape[0]
    day_index = np.asarray(days if days is not None else np.arange(n), dtype=int)
    if len(day_index) != n:
        raise InventoryError("day index misaligned with forecasts")

    if variant == "5-time-lstm":
        if forecasts.ndim != 2 or forecasts.shape[1] != len(SLOTS):
            raise InventoryError("slot-level plan needs [n x 5] forecasts")
        errors = actuals - forecasts
        days_out, slots, mus, sigmas, qs = [], [], [], [], []
        for i in range(n):
            for slot in range(len(SLOTS)):
                sigma = _trailing_error_sd(errors[:, slot], i, window_days)
                days_out.append(day_index[i])
                slots.append(slot)
                mus.append(forecasts[i, slot])
                sigmas.append(sigma)
                qs.append(q_star(forecasts[i, slot], sigma, params.z_score))
        return InventoryPlan(variant, np.array(days_out), np.array(slots),
                             np.array(mus), np.array(sigmas), np.array(qs))

    if forecasts.ndim == 2:
        forecasts = forecasts.mean(axis=1)
        actuals = actuals.mean(axis=1)
    errors = actuals - forecasts
    sigmas = np.array([_trailing_error_sd(errors, i, window_days) for i in range(n)])
    qs = np.array([q_star(forecasts[i], sigmas[i], params.z_score) for i in range(n)])
    return InventoryPlan(variant, day_index, np.full(n, -1), forecasts, sigmas, qs)


def trailing_demand_share(demand_z: np.ndarray, demand_s: np.ndarray,
                          window_days: int) -> np.ndarray:
    """Zomato's share of trailing mean demand per day (0.5 before any history)."""
    demand_z = np.asarray(demand_z, dtype=float)
    demand_s = np.asarray(demand_s, dtype=float)
    daily_z = demand_z.mean(axis=1) if demand_z.ndim == 2 else demand_z
    daily_s = demand_s.mean(axis=1) if demand_s.ndim == 2 else demand_s
    n_days = len(daily_z)
    share = np.full(n_days, 0.5)
    for day in range(1, n_days):
        lo = max(0, day - window_days)
        mz = daily_z[lo:day].mean()
        ms = daily_s[lo:day].mean()
        if mz + ms > 0:
            share[day] = mz / (mz + ms)
    return share
