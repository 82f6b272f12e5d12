"""Discrete-event demand simulator for the two delivery platforms.

Events fire at five fixed slots per day over the configured date range. Each
slot emits one 19-column record; a fixed seed reproduces the dataset byte for
byte.
"""

import csv
import logging
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from demandlab import seeding
from demandlab.simulation import sampling
from demandlab.simulation.config import (
    ConfigError,
    ExternalContext,
    PLATFORMS,
    SEGMENTS,
    SLOTS,
    WEATHER_KINDS,
    SimConfig,
    season_of,
)

log = logging.getLogger(__name__)

COLUMNS = (
    "week_index",
    "date",
    "day_of_week",
    "time_slot",
    "food_category",
    "price_zomato",
    "price_swiggy",
    "demand_zomato",
    "demand_swiggy",
    "lead_time_zomato",
    "lead_time_swiggy",
    "distance_zomato",
    "distance_swiggy",
    "supplier_inventory",
    "public_holiday",
    "event_importance",
    "weather_condition",
    "customer_segment",
    "order_arrival_rate",
)

_FLOAT_COLUMNS = frozenset(
    c for c in COLUMNS
    if c.startswith(("price_", "demand_", "lead_time_", "distance_"))
    or c in ("supplier_inventory", "order_arrival_rate")
)


@dataclass
class DemandRecord:
    week_index: int
    date: date
    day_of_week: str
    time_slot: str
    food_category: str
    price_zomato: float
    price_swiggy: float
    demand_zomato: float
    demand_swiggy: float
    lead_time_zomato: float
    lead_time_swiggy: float
    distance_zomato: float
    distance_swiggy: float
    supplier_inventory: float
    public_holiday: bool
    event_importance: str
    weather_condition: str
    customer_segment: str
    order_arrival_rate: float


class Dataset:
    """Slot-level records in chronological order, 5 per simulated day."""

    def __init__(self, records, clamp_events: int = 0):
        self.records = list(records)
        self.clamp_events = clamp_events
        if len(self.records) % len(SLOTS) != 0:
            raise ValueError("dataset must contain whole days (5 records per day)")

    def __len__(self):
        return len(self.records)

    @property
    def n_days(self) -> int:
        return len(self.records) // len(SLOTS)

    @property
    def dates(self):
        return [self.records[i * len(SLOTS)].date for i in range(self.n_days)]

    def column(self, name: str):
        values = [getattr(r, name) for r in self.records]
        if name in _FLOAT_COLUMNS:
            return np.asarray(values, dtype=float)
        return values

    def demand_matrix(self, platform: str) -> np.ndarray:
        """Demand as a [days x 5] array for one platform."""
        col = self.column(f"demand_{platform}")
        return col.reshape(self.n_days, len(SLOTS))

    def slice_days(self, start: int, stop: int) -> "Dataset":
        k = len(SLOTS)
        return Dataset(self.records[start * k:stop * k], clamp_events=0)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for r in self.records:
                writer.writerow([_format_field(name, getattr(r, name)) for name in COLUMNS])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        records = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != COLUMNS:
                raise ValueError(f"{path}: unexpected header {header}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(COLUMNS):
                    raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, "
                                     f"got {len(row)}")
                try:
                    records.append(_parse_record(row))
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from exc
        return cls(records)


def _format_field(name: str, value):
    if name in _FLOAT_COLUMNS:
        return f"{value:.6f}"
    if name == "date":
        return value.isoformat()
    if name == "public_holiday":
        return "1" if value else "0"
    return str(value)


def _parse_record(row) -> DemandRecord:
    data = dict(zip(COLUMNS, row))
    for name in _FLOAT_COLUMNS:
        data[name] = float(data[name])
    data["week_index"] = int(data["week_index"])
    data["date"] = date.fromisoformat(data["date"])
    data["public_holiday"] = data["public_holiday"] == "1"
    return DemandRecord(**data)


def _trailing_slot_inventory(history_z, history_s, z_score: float, window: int,
                             fallback: float) -> float:
    """Order-up-to level from trailing per-slot statistics of total demand.

    Uses up to `window` most recent days; below two days of history returns
    the fallback (cold-start rows at the head of the dataset).
    """
    n = len(history_z)
    if n < 2:
        return fallback
    take = min(window, n)
    hz = np.asarray(history_z[-take:], dtype=float)
    hs = np.asarray(history_s[-take:], dtype=float)
    mu = float(np.mean(hz + hs))
    sd_z = float(np.std(hz))
    sd_s = float(np.std(hs))
    if sd_z == 0.0 or sd_s == 0.0:
        rho = 0.0
    else:
        rho = float(np.corrcoef(hz, hs)[0, 1])
    combined = float(np.sqrt(max(sd_z**2 + sd_s**2 + 2.0 * rho * sd_z * sd_s, 0.0)))
    return max(mu + z_score * combined, 0.0)


def run_simulation(cfg: SimConfig) -> Dataset:
    """Generate the full dataset. Pure function of the config, seed included."""
    cfg.validate()
    calendar = cfg.calendar.restricted_to(cfg.start_date, cfg.end_date)
    if not calendar.weather_probabilities:
        raise ConfigError("empty calendar")

    streams = {name: seeding.stream(cfg.seed, f"sim/{name}") for name in
               ("weather", "events", "arrival", "distances", "prep", "delivery",
                "noise", "multipliers", "market")}

    categories = list(cfg.price_model.base_prices)
    category_weights = [cfg.price_model.category_weights[c] for c in categories]
    segment_probs = list(calendar.segment_probabilities)
    slot_periods = dict(zip(SLOTS, cfg.slot_periods))
    d_lo, d_hi = cfg.lead_time_model.distance_range_km

    records = []
    clamp_events = 0
    history = {slot: {p: [] for p in PLATFORMS} for slot in SLOTS}

    n_days = cfg.n_days
    # Slow shared market-level trend (growth or decline) over the whole horizon.
    market = np.empty(n_days)
    level = 1.0
    for day_index in range(n_days):
        market[day_index] = max(level, 0.1)
        level = 1.0 + cfg.market_level_phi * (level - 1.0) + float(
            streams["market"].normal(0.0, cfg.market_level_sigma))

    for day_index in range(n_days):
        today = cfg.start_date + timedelta(days=day_index)
        weather = str(streams["weather"].choice(WEATHER_KINDS,
                                                p=calendar.weather_probabilities[
                                                    season_of(today.month)]))
        importance = calendar.holidays.get(today, "None")
        holiday = importance != "None"
        weekday_mult = cfg.weekday_multipliers[today.weekday()]

        for slot_index, slot in enumerate(SLOTS):
            events = streams["events"]
            segment = str(events.choice(SEGMENTS, p=segment_probs))
            # A loyal customer base favours one platform; the rival serves it as a
            # mismatched audience. The favoured side is a hidden fair coin.
            favoured = str(events.choice(PLATFORMS)) if segment == "Loyal" else None
            category = str(events.choice(categories, p=category_weights))

            period = slot_periods[slot]
            rate_lo, rate_hi = cfg.lead_time_model.arrival_rate_ranges[period]
            arrival_rate = float(streams["arrival"].uniform(rate_lo, rate_hi))

            distance = {p: float(streams["distances"].uniform(d_lo, d_hi))
                        for p in PLATFORMS}
            leads = {}
            prices = {}
            for p in PLATFORMS:
                prep = sampling.sample_prep_time(cfg.lead_time_model, streams["prep"])
                delivery = sampling.sample_delivery_time(distance[p], cfg.lead_time_model,
                                                         streams["delivery"])
                leads[p] = sampling.lead_time(prep, delivery)
                prices[p] = sampling.price(p, category, distance[p], cfg.price_model)

            epsilon = float(streams["noise"].normal(cfg.noise_mean, cfg.noise_sd))
            cyc = sampling.cyclical_factor(slot_index, cfg.cyclical)

            demands = {}
            for p, q in (("zomato", "swiggy"), ("swiggy", "zomato")):
                if segment == "Loyal":
                    platform_segment = "Loyal" if p == favoured else "Mismatched"
                else:
                    platform_segment = segment
                ctx = ExternalContext(time_slot=slot, weather=weather, holiday=holiday,
                                      event_importance=importance,
                                      customer_segment=platform_segment)
                f4 = sampling.seasonal_multiplier(ctx, streams["multipliers"], slot_periods)
                f_total = cyc * weekday_mult * market[day_index] * f4
                value, clamped = sampling.demand_with_clamp(
                    cfg.platform_params[p], prices[p], prices[q], leads[p], leads[q],
                    f_total, epsilon, cfg)
                demands[p] = value
                clamp_events += int(clamped)

            total_today = demands["zomato"] + demands["swiggy"]
            supplier_inventory = _trailing_slot_inventory(
                history[slot]["zomato"], history[slot]["swiggy"],
                cfg.z_score, cfg.inventory_window_days, fallback=total_today)

            records.append(DemandRecord(
                week_index=day_index // 7 + 1,
                date=today,
                day_of_week=today.strftime("%A"),
                time_slot=slot,
                food_category=category,
                price_zomato=prices["zomato"],
                price_swiggy=prices["swiggy"],
                demand_zomato=demands["zomato"],
                demand_swiggy=demands["swiggy"],
                lead_time_zomato=leads["zomato"],
                lead_time_swiggy=leads["swiggy"],
                distance_zomato=distance["zomato"],
                distance_swiggy=distance["swiggy"],
                supplier_inventory=supplier_inventory,
                public_holiday=holiday,
                event_importance=importance,
                weather_condition=weather,
                customer_segment=segment,
                order_arrival_rate=arrival_rate,
            ))

        for slot_index, slot in enumerate(SLOTS):
            record = records[day_index * len(SLOTS) + slot_index]
            history[slot]["zomato"].append(record.demand_zomato)
            history[slot]["swiggy"].append(record.demand_swiggy)

    if clamp_events:
        log.info("demand clamped to zero %d time(s)", clamp_events)
    return Dataset(records, clamp_events=clamp_events)
