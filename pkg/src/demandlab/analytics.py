"""Forecast accuracy metrics, exploratory statistics, and bullwhip quantification.

All variances are population (divide by N) variances, matching the scaler.
"""

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from demandlab import inventory as inv
from demandlab.simulation.config import SLOTS

PHASES = (1, 2)
SEGMENTS_B = ("training", "testing", "predicted")
SCOPES = ("zomato", "swiggy", "overall")


class AnalyticsError(ValueError):
    pass


def _aligned(actual, predicted):
    a = np.asarray(actual, dtype=float).reshape(-1)
    p = np.asarray(predicted, dtype=float).reshape(-1)
    if a.shape != p.shape or len(a) == 0:
        raise AnalyticsError(f"series length mismatch: {a.shape} vs {p.shape}")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _aligned(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def mae(actual, predicted) -> float:
    a, p = _aligned(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def r2(actual, predicted) -> float:
    a, p = _aligned(actual, predicted)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise AnalyticsError("R^2 undefined: actual series is constant")
    ss_res = float(np.sum((a - p) ** 2))
    return 1.0 - ss_res / ss_tot


def population_variance(series) -> float:
    values = np.asarray(series, dtype=float).reshape(-1)
    return float(np.var(values))


@dataclass
class MetricsReport:
    platform: str
    phase: int
    rmse: float
    mae: float
    r2: float
    training_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"platform": self.platform, "phase": self.phase, "rmse": self.rmse,
                "mae": self.mae, "r2": self.r2,
                "training_seconds": self.training_seconds}


# ---------------------------------------------------------------------------
# Exploratory statistics
# ---------------------------------------------------------------------------

@dataclass
class EdaReport:
    daily_average: np.ndarray
    cumulative_mean: np.ndarray
    rolling_variance: np.ndarray  # 7-day window, defined from day 7
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    qq_theoretical: np.ndarray
    qq_sample: np.ndarray


def rolling_variance(daily: np.ndarray, window: int = 7) -> np.ndarray:
    """Mean squared deviation from the window mean over trailing `window` days."""
    daily = np.asarray(daily, dtype=float)
    n = len(daily)
    if n < window:
        raise AnalyticsError(f"need at least {window} days, got {n}")
    out = np.zeros(n - window + 1)
    for t in range(window - 1, n):
        chunk = daily[t - window + 1:t + 1]
        out[t - window + 1] = np.mean((chunk - chunk.mean()) ** 2)
    return out


def sturges_bins(n: int) -> int:
    if n < 1:
        raise AnalyticsError("empty sample")
    return int(math.ceil(math.log2(n))) + 1 if n > 1 else 1


def eda(slot_demand: np.ndarray) -> EdaReport:
    """EDA series for one platform's [days x 5] demand matrix (needs >= 7 days)."""
    matrix = np.asarray(slot_demand, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != len(SLOTS):
        raise AnalyticsError("expected a [days x 5] demand matrix")
    if matrix.shape[0] < 7:
        raise AnalyticsError(f"EDA needs at least 7 days, got {matrix.shape[0]}")
    daily = matrix.mean(axis=1)
    cumulative = np.cumsum(daily) / np.arange(1, len(daily) + 1)
    rolling = rolling_variance(daily, window=7)

    values = matrix.reshape(-1)
    counts, edges = np.histogram(values, bins=sturges_bins(len(values)))

    ordered = np.sort(values)
    n = len(ordered)
    mu = float(values.mean())
    sd = float(values.std())
    if sd == 0.0:
        theoretical = np.full(n, mu)
    else:
        dist = NormalDist(mu, sd)
        theoretical = np.array([dist.inv_cdf((i + 0.5) / n) for i in range(n)])
    return EdaReport(daily_average=daily, cumulative_mean=cumulative,
                     rolling_variance=rolling, hist_edges=edges, hist_counts=counts,
                     qq_theoretical=theoretical, qq_sample=ordered)


# ---------------------------------------------------------------------------
# Bullwhip effect
# ---------------------------------------------------------------------------

def bullwhip(inventory_series, demand_series) -> float:
    """Variance ratio var(inventory) / var(demand)."""
    inventory_values = np.asarray(inventory_series, dtype=float).reshape(-1)
    demand_values = np.asarray(demand_series, dtype=float).reshape(-1)
    if len(inventory_values) < 2 or len(demand_values) < 2:
        raise AnalyticsError("bullwhip needs at least 2 points per series")
    var_d = population_variance(demand_values)
    if var_d == 0.0:
        raise AnalyticsError("bullwhip undefined: demand variance is zero")
    return population_variance(inventory_values) / var_d


@dataclass
class BullwhipValue:
    ratio: float = None
    inventory_variance: float = 0.0
    demand_variance: float = 0.0
    degenerate: bool = False


@dataclass
class BullwhipReport:
    # values[phase][segment][scope] -> BullwhipValue
    values: dict = field(default_factory=dict)

    def set(self, phase: int, segment: str, scope: str, value: BullwhipValue) -> None:
        self.values.setdefault(phase, {}).setdefault(segment, {})[scope] = value

    def get(self, phase: int, segment: str, scope: str) -> BullwhipValue:
        return self.values[phase][segment][scope]

    def is_complete(self, phases=PHASES) -> bool:
        for phase in phases:
            for segment in SEGMENTS_B:
                for scope in SCOPES:
                    if scope not in self.values.get(phase, {}).get(segment, {}):
                        return False
        return True

    def to_rows(self):
        rows = []
        for phase in sorted(self.values):
            for segment in SEGMENTS_B:
                if segment not in self.values[phase]:
                    continue
                for scope in SCOPES:
                    cell = self.values[phase][segment].get(scope)
                    if cell is None:
                        continue
                    rows.append({
                        "phase": phase, "segment": segment, "scope": scope,
                        "bullwhip": cell.ratio,
                        "inventory_variance": cell.inventory_variance,
                        "demand_variance": cell.demand_variance,
                        "degenerate": cell.degenerate,
                    })
        return rows

    def to_text(self) -> str:
        lines = ["bullwhip coefficients (inventory variance / demand variance)"]
        for row in self.to_rows():
            ratio = "degenerate" if row["degenerate"] else f"{row['bullwhip']:.4f}"
            lines.append(f"phase {row['phase']:<2} {row['segment']:<10} "
                         f"{row['scope']:<8} B = {ratio}")
        return "\n".join(lines) + "\n"


def _cell(inventory_series, demand_series) -> BullwhipValue:
    inventory_values = np.asarray(inventory_series, dtype=float).reshape(-1)
    demand_values = np.asarray(demand_series, dtype=float).reshape(-1)
    var_i = population_variance(inventory_values) if len(inventory_values) else 0.0
    var_d = population_variance(demand_values) if len(demand_values) else 0.0
    if len(inventory_values) < 2 or var_d == 0.0:
        return BullwhipValue(None, var_i, var_d, degenerate=True)
    return BullwhipValue(var_i / var_d, var_i, var_d)


def _segment_cells(report, phase, segment, plan_days, plan_slots, plan_q,
                   demand_z, demand_s, share):
    """Fill zomato / swiggy / overall cells for one (phase, segment)."""
    plan_days = np.asarray(plan_days, dtype=int)
    plan_q = np.asarray(plan_q, dtype=float)
    share_z = share[plan_days]
    if plan_slots is not None and np.any(np.asarray(plan_slots) >= 0):
        slots = np.asarray(plan_slots, dtype=int)
        dem_z = demand_z[plan_days, slots]
        dem_s = demand_s[plan_days, slots]
    else:
        dem_z = demand_z.mean(axis=1)[plan_days] if demand_z.ndim == 2 else demand_z[plan_days]
        dem_s = demand_s.mean(axis=1)[plan_days] if demand_s.ndim == 2 else demand_s[plan_days]
    report.set(phase, segment, "zomato", _cell(plan_q * share_z, dem_z))
    report.set(phase, segment, "swiggy", _cell(plan_q * (1.0 - share_z), dem_s))
    report.set(phase, segment, "overall", _cell(plan_q, dem_z + dem_s))


def bullwhip_report(demand_z: np.ndarray, demand_s: np.ndarray, n_train: int,
                    n_val: int, forecasts: dict, params: inv.NewsvendorParams,
                    window_days: int):
    """Bullwhip coefficients for both phases across training/testing/predicted segments.

    `forecasts` maps phase -> (target day indices, total-demand forecasts):
    phase 1 expects [n x 5] slot forecasts, phase 2 a daily series. Historical
    plans are computed over the full history and sliced per segment; the
    restaurant's shared inventory is attributed to platforms by trailing
    demand share. Returns (BullwhipReport, plans dict for export).
    """
    demand_z = np.asarray(demand_z, dtype=float)
    demand_s = np.asarray(demand_s, dtype=float)
    n_days = demand_z.shape[0]
    n_test_start = n_train + n_val
    share = inv.trailing_demand_share(demand_z, demand_s, window_days)
    report = BullwhipReport()
    plans = {}

    for phase, variant in ((1, "5-time"), (2, "daily")):
        plan = inv.plan_from_history(demand_z, demand_s, variant, params, window_days)
        plans[(phase, "historical")] = plan
        in_train = plan.days < n_train
        in_test = plan.days >= n_test_start
        _segment_cells(report, phase, "training", plan.days[in_train],
                       plan.slots[in_train], plan.q_star[in_train],
                       demand_z, demand_s, share)
        _segment_cells(report, phase, "testing", plan.days[in_test],
                       plan.slots[in_test], plan.q_star[in_test],
                       demand_z, demand_s, share)

        if phase not in forecasts:
            continue
        days, forecast_total = forecasts[phase]
        days = np.asarray(days, dtype=int)
        if np.any(days >= n_days):
            raise AnalyticsError("forecast day index outside the dataset")
        if phase == 1:
            actual_total = demand_z[days] + demand_s[days]
            fplan = inv.plan_from_forecast(forecast_total, actual_total, "5-time-lstm",
                                           params, window_days, days=days)
        else:
            actual_total = demand_z.mean(axis=1)[days] + demand_s.mean(axis=1)[days]
            fplan = inv.plan_from_forecast(forecast_total, actual_total, "daily-lstm",
                                           params, window_days, days=days)
        plans[(phase, "forecast")] = fplan
        _segment_cells(report, phase, "predicted", fplan.days, fplan.slots,
                       fplan.q_star, demand_z, demand_s, share)

    return report, plans
