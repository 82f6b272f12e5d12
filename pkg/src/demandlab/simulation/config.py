"""Simulation configuration: domain types, defaults, and INI round-trip.

All tunables live here; nothing numeric is hard-coded in the engine. The
config file is a flat-section key/value document (configparser syntax) and
every default below can be overridden from it.
"""

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from datetime import date

SLOTS = ("Morning", "Noon", "Evening", "Night", "Midnight")
WEATHER_KINDS = ("Clear", "Mild", "Extreme")
SEGMENTS = ("Mismatched", "General", "Loyal")
IMPORTANCE_LEVELS = ("None", "Low", "Medium", "High")
SEASONS = ("winter", "summer", "monsoon", "post_monsoon")
DEMAND_PERIODS = ("peak", "standard", "late_night")
PLATFORMS = ("zomato", "swiggy")
WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")

_PROB_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid or inconsistent configuration value."""


def season_of(month: int) -> str:
    if month in (12, 1, 2):
        return "winter"
    if month in (3, 4, 5):
        return "summer"
    if month in (6, 7, 8):
        return "monsoon"
    return "post_monsoon"  # Sep-Nov: retreating rains, festival season


@dataclass
class PlatformParams:
    """Baseline demand level and own-price sensitivity of one platform."""

    name: str
    alpha: float
    beta: float = 1.5

    def validate(self) -> None:
        if self.alpha <= 0:
            raise ConfigError(f"{self.name}: alpha must be > 0, got {self.alpha}")
        if self.beta < 0:
            raise ConfigError(f"{self.name}: beta must be >= 0, got {self.beta}")


@dataclass
class CyclicalParams:
    """Sinusoidal intra-day demand profile: amplitude*sin(pi/period*t + phase) + baseline."""

    amplitude: float = 0.475
    period: float = 5.0
    phase_shift: float = 1.5
    baseline: float = 0.525

    def validate(self) -> None:
        if self.period <= 0:
            raise ConfigError(f"cyclical period must be > 0, got {self.period}")
        if self.baseline - self.amplitude < 0:
            raise ConfigError(
                "cyclical factor can go negative: baseline - amplitude = "
                f"{self.baseline - self.amplitude}"
            )


@dataclass
class ExternalContext:
    """Per-slot external conditions feeding the composite demand multiplier."""

    time_slot: str
    weather: str
    holiday: bool
    event_importance: str
    customer_segment: str

    def validate(self) -> None:
        if self.time_slot not in SLOTS:
            raise ConfigError(f"unknown time slot {self.time_slot!r}")
        if self.weather not in WEATHER_KINDS:
            raise ConfigError(f"unknown weather {self.weather!r}")
        if self.event_importance not in IMPORTANCE_LEVELS:
            raise ConfigError(f"unknown event importance {self.event_importance!r}")
        if self.customer_segment not in SEGMENTS:
            raise ConfigError(f"unknown customer segment {self.customer_segment!r}")
        if self.event_importance != "None" and not self.holiday:
            raise ConfigError("event importance set on a non-event day")


@dataclass
class EventCalendar:
    """Holiday dates with importance plus categorical weather/segment mixes."""

    holidays: dict = field(default_factory=dict)  # date -> importance level
    weather_probabilities: dict = field(default_factory=dict)  # season -> (clear, mild, extreme)
    segment_probabilities: tuple = (0.08, 0.77, 0.15)  # (mismatched, general, loyal)

    def validate(self, start: date, end: date) -> None:
        for day, importance in self.holidays.items():
            if importance not in IMPORTANCE_LEVELS or importance == "None":
                raise ConfigError(f"holiday {day}: bad importance {importance!r}")
            if not (start <= day <= end):
                raise ConfigError(f"holiday {day} outside simulated range {start}..{end}")
        for season in SEASONS:
            probs = self.weather_probabilities.get(season)
            if probs is None:
                raise ConfigError(f"missing weather probabilities for season {season!r}")
            _check_probs(f"weather[{season}]", probs, len(WEATHER_KINDS))
        _check_probs("segment", self.segment_probabilities, len(SEGMENTS))

    def restricted_to(self, start: date, end: date) -> "EventCalendar":
        """Copy with holiday entries outside [start, end] dropped."""
        kept = {d: imp for d, imp in self.holidays.items() if start <= d <= end}
        return EventCalendar(kept, dict(self.weather_probabilities), self.segment_probabilities)


def _check_probs(name: str, probs, expected_len: int) -> None:
    if len(probs) != expected_len:
        raise ConfigError(f"{name}: expected {expected_len} probabilities, got {len(probs)}")
    if any(p < 0 for p in probs):
        raise ConfigError(f"{name}: negative probability")
    if abs(sum(probs) - 1.0) > _PROB_TOL:
        raise ConfigError(f"{name}: probabilities sum to {sum(probs)}, not 1")


@dataclass
class DistanceBand:
    """Delivery-minute bounds for one distance band [lo_km, hi_km)."""

    lo_km: float
    hi_km: float
    minutes_lo: float
    minutes_hi: float


@dataclass
class LeadTimeModel:
    """Order fulfilment timing: lognormal prep, banded uniform delivery, Poisson arrivals."""

    prep_log_mu: float = 3.35
    prep_log_sigma: float = 0.32
    distance_bands: list = field(
        default_factory=lambda: [
            DistanceBand(0.0, 5.0, 15.0, 20.0),
            DistanceBand(5.0, 10.0, 30.0, 35.0),
            DistanceBand(10.0, float("inf"), 40.0, 45.0),
        ]
    )
    arrival_rate_ranges: dict = field(
        default_factory=lambda: {
            "peak": (3.0, 10.0),
            "standard": (2.0, 6.0),
            "late_night": (1.0, 3.0),
        }
    )
    distance_range_km: tuple = (1.0, 15.0)

    def validate(self) -> None:
        if self.prep_log_sigma <= 0:
            raise ConfigError(f"prep_log_sigma must be > 0, got {self.prep_log_sigma}")
        lo, hi = self.distance_range_km
        if not lo < hi:
            raise ConfigError(f"bad distance range {self.distance_range_km}")
        bands = sorted(self.distance_bands, key=lambda b: b.lo_km)
        if not bands:
            raise ConfigError("no delivery distance bands configured")
        for band in bands:
            if not band.minutes_lo < band.minutes_hi:
                raise ConfigError(
                    f"band {band.lo_km}-{band.hi_km}: minute bounds "
                    f"{band.minutes_lo} >= {band.minutes_hi}"
                )
        if bands[0].lo_km > lo or bands[-1].hi_km < hi:
            raise ConfigError("delivery bands do not cover the distance range")
        for prev, cur in zip(bands, bands[1:]):
            if prev.hi_km != cur.lo_km:
                raise ConfigError(
                    f"delivery bands must partition the distance range; gap/overlap at "
                    f"{prev.hi_km} vs {cur.lo_km}"
                )
        for period, (rlo, rhi) in self.arrival_rate_ranges.items():
            if period not in DEMAND_PERIODS:
                raise ConfigError(f"unknown demand period {period!r}")
            if rlo <= 0 or rhi < rlo:
                raise ConfigError(f"bad arrival rate range {period}: ({rlo}, {rhi})")


@dataclass
class PriceModel:
    """Checkout price components per platform plus the menu of base prices."""

    base_prices: dict = field(
        default_factory=lambda: {
            "Biryani": 250.0,
            "Pizza": 300.0,
            "Burger": 150.0,
            "Thali": 220.0,
            "Noodles": 180.0,
            "Dessert": 120.0,
            "Beverages": 80.0,
        }
    )
    category_weights: dict = field(
        default_factory=lambda: {
            "Biryani": 0.20,
            "Pizza": 0.15,
            "Burger": 0.18,
            "Thali": 0.15,
            "Noodles": 0.12,
            "Dessert": 0.10,
            "Beverages": 0.10,
        }
    )
    gst_multiplier: float = 1.05
    platform_fee: dict = field(default_factory=lambda: {"zomato": 10.0, "swiggy": 10.0})
    base_delivery_fee: dict = field(default_factory=lambda: {"zomato": 20.0, "swiggy": 20.0})
    per_km_rate: dict = field(default_factory=lambda: {"zomato": 6.0, "swiggy": 6.0})
    small_order_threshold: float = 100.0
    small_order_fee: float = 25.0

    def validate(self) -> None:
        if self.gst_multiplier < 1.0:
            raise ConfigError(f"gst_multiplier must be >= 1, got {self.gst_multiplier}")
        if not self.base_prices:
            raise ConfigError("empty base price table")
        for name, value in self.base_prices.items():
            if value < 0:
                raise ConfigError(f"negative base price for {name}")
        if set(self.category_weights) != set(self.base_prices):
            raise ConfigError("category weights must cover exactly the base price table")
        _check_probs("category_weights", list(self.category_weights.values()),
                      len(self.category_weights))
        for table in (self.platform_fee, self.base_delivery_fee, self.per_km_rate):
            for platform in PLATFORMS:
                if table.get(platform, 0.0) < 0:
                    raise ConfigError(f"negative fee for {platform}")
        if self.small_order_threshold < 0 or self.small_order_fee < 0:
            raise ConfigError("small-order parameters must be >= 0")


@dataclass
class SimConfig:
    """Every simulation parameter, including the master seed."""

    start_date: date = date(2023, 1, 1)
    end_date: date = date(2025, 1, 1)  # inclusive
    slots_per_day: int = 5
    seed: int = 42
    platform_params: dict = field(
        default_factory=lambda: {
            "zomato": PlatformParams("zomato", alpha=10_000.0),
            "swiggy": PlatformParams("swiggy", alpha=12_000.0),
        }
    )
    noise_mean: float = 0.0
    noise_sd: float = 20.0
    gamma: float = 0.5  # orders lost per minute of own lead time
    delta: float = 0.5  # orders per minute of lead-time gap with the rival
    tau: float = 0.5  # orders per currency unit of price gap with the rival
    z_score: float = 1.96
    # Slow AR(1) market-level trend shared by both platforms:
    # level_d = 1 + phi*(level_{d-1} - 1) + N(0, sigma), level_0 = 1.
    market_level_phi: float = 0.99
    market_level_sigma: float = 0.004
    calendar: EventCalendar = field(default_factory=lambda: default_calendar())
    price_model: PriceModel = field(default_factory=PriceModel)
    lead_time_model: LeadTimeModel = field(default_factory=LeadTimeModel)
    cyclical: CyclicalParams = field(default_factory=CyclicalParams)
    # Monday..Sunday demand-level multipliers (weekend-heavy ordering).
    weekday_multipliers: tuple = (0.78, 0.70, 0.78, 0.92, 1.26, 1.65, 1.52)
    # Demand-period class per slot, ordered as SLOTS. Defaults follow the ranking of
    # the cyclical profile so arrival rates and time-of-day ranges track demand.
    slot_periods: tuple = ("peak", "peak", "standard", "standard", "late_night")
    # Trailing window (days) behind the supplier_inventory column.
    inventory_window_days: int = 7

    def validate(self) -> None:
        if self.start_date >= self.end_date:
            raise ConfigError(f"start_date {self.start_date} must precede end_date {self.end_date}")
        if self.slots_per_day != len(SLOTS):
            raise ConfigError(f"slots_per_day is fixed at {len(SLOTS)}")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")
        if self.z_score <= 0:
            raise ConfigError("z_score must be > 0")
        for name in ("gamma", "delta", "tau"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if set(self.platform_params) != set(PLATFORMS):
            raise ConfigError(f"platform_params must define exactly {PLATFORMS}")
        for params in self.platform_params.values():
            params.validate()
        if len(self.weekday_multipliers) != 7 or any(m < 0 for m in self.weekday_multipliers):
            raise ConfigError("weekday_multipliers must be 7 non-negative values")
        if len(self.slot_periods) != len(SLOTS):
            raise ConfigError("slot_periods must assign a period to each of the 5 slots")
        for period in self.slot_periods:
            if period not in DEMAND_PERIODS:
                raise ConfigError(f"unknown demand period {period!r}")
        if self.inventory_window_days < 2:
            raise ConfigError("inventory_window_days must be >= 2")
        if not 0.0 <= self.market_level_phi < 1.0:
            raise ConfigError("market_level_phi must lie in [0, 1)")
        if self.market_level_sigma < 0:
            raise ConfigError("market_level_sigma must be >= 0")
        self.cyclical.validate()
        self.lead_time_model.validate()
        self.price_model.validate()
        self.calendar.validate(self.start_date, self.end_date)

    @property
    def n_days(self) -> int:
        return (self.end_date - self.start_date).days + 1


def default_calendar() -> EventCalendar:
    """Indian festival calendar for 2023-2025 plus seasonal weather mixes."""
    holidays = {
        date(2023, 1, 1): "High",     # New Year's Day
        date(2023, 1, 14): "Medium",  # Pongal / Makar Sankranti
        date(2023, 1, 26): "Medium",  # Republic Day
        date(2023, 2, 14): "Low",     # Valentine's Day
        date(2023, 3, 8): "Medium",   # Holi
        date(2023, 4, 22): "Medium",  # Eid
        date(2023, 6, 29): "Low",     # Bakrid
        date(2023, 8, 15): "Medium",  # Independence Day
        date(2023, 8, 30): "Low",     # Raksha Bandhan
        date(2023, 9, 19): "Medium",  # Ganesh Chaturthi
        date(2023, 10, 24): "Medium", # Dussehra
        date(2023, 11, 12): "High",   # Diwali
        date(2023, 12, 25): "High",   # Christmas
        date(2023, 12, 31): "Medium", # New Year's Eve
        date(2024, 1, 1): "High",
        date(2024, 1, 14): "Medium",
        date(2024, 1, 26): "Medium",
        date(2024, 2, 14): "Low",
        date(2024, 3, 25): "Medium",  # Holi
        date(2024, 4, 11): "Medium",  # Eid
        date(2024, 6, 17): "Low",     # Bakrid
        date(2024, 8, 15): "Medium",
        date(2024, 8, 19): "Low",     # Raksha Bandhan
        date(2024, 9, 7): "Medium",   # Ganesh Chaturthi
        date(2024, 11, 1): "High",    # Diwali
        date(2024, 12, 25): "High",
        date(2025, 1, 1): "High",
    }
    weather = {
        "winter": (0.95, 0.04, 0.01),
        "summer": (0.70, 0.25, 0.05),
        "monsoon": (0.50, 0.40, 0.10),
        "post_monsoon": (0.86, 0.11, 0.03),
    }
    return EventCalendar(holidays=holidays, weather_probabilities=weather)


def default_config(**overrides) -> SimConfig:
    cfg = SimConfig(**overrides)
    cfg.calendar = cfg.calendar.restricted_to(cfg.start_date, cfg.end_date)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# INI round trip
# ---------------------------------------------------------------------------

def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep case of category names and dates
    return parser


def _floats(text: str) -> list:
    return [float(part.strip()) for part in text.split(",") if part.strip()]


def _strings(text: str) -> list:
    return [part.strip() for part in text.split(",") if part.strip()]


def config_to_ini(cfg: SimConfig) -> str:
    parser = _parser()
    parser["simulation"] = {
        "start_date": cfg.start_date.isoformat(),
        "end_date": cfg.end_date.isoformat(),
        "slots_per_day": str(cfg.slots_per_day),
        "seed": str(cfg.seed),
        "noise_mean": repr(cfg.noise_mean),
        "noise_sd": repr(cfg.noise_sd),
        "gamma": repr(cfg.gamma),
        "delta": repr(cfg.delta),
        "tau": repr(cfg.tau),
        "z_score": repr(cfg.z_score),
        "market_level_phi": repr(cfg.market_level_phi),
        "market_level_sigma": repr(cfg.market_level_sigma),
        "weekday_multipliers": ", ".join(repr(m) for m in cfg.weekday_multipliers),
        "slot_periods": ", ".join(cfg.slot_periods),
        "inventory_window_days": str(cfg.inventory_window_days),
    }
    for platform in PLATFORMS:
        params = cfg.platform_params[platform]
        parser[f"platform.{platform}"] = {"alpha": repr(params.alpha), "beta": repr(params.beta)}
    cyc = cfg.cyclical
    parser["cyclical"] = {
        "amplitude": repr(cyc.amplitude),
        "period": repr(cyc.period),
        "phase_shift": repr(cyc.phase_shift),
        "baseline": repr(cyc.baseline),
    }
    ltm = cfg.lead_time_model
    lead = {
        "prep_log_mu": repr(ltm.prep_log_mu),
        "prep_log_sigma": repr(ltm.prep_log_sigma),
        "distance_range_km": ", ".join(repr(v) for v in ltm.distance_range_km),
    }
    for i, band in enumerate(ltm.distance_bands):
        lead[f"band_{i}"] = f"{band.lo_km!r}, {band.hi_km!r}, {band.minutes_lo!r}, {band.minutes_hi!r}"
    for period in DEMAND_PERIODS:
        lo, hi = ltm.arrival_rate_ranges[period]
        lead[f"arrival_{period}"] = f"{lo!r}, {hi!r}"
    parser["leadtime"] = lead
    pm = cfg.price_model
    price = {
        "gst_multiplier": repr(pm.gst_multiplier),
        "small_order_threshold": repr(pm.small_order_threshold),
        "small_order_fee": repr(pm.small_order_fee),
    }
    for platform in PLATFORMS:
        price[f"platform_fee.{platform}"] = repr(pm.platform_fee[platform])
        price[f"base_delivery_fee.{platform}"] = repr(pm.base_delivery_fee[platform])
        price[f"per_km_rate.{platform}"] = repr(pm.per_km_rate[platform])
    for category in pm.base_prices:
        price[f"base_price.{category}"] = repr(pm.base_prices[category])
        price[f"category_weight.{category}"] = repr(pm.category_weights[category])
    parser["price"] = price
    cal = cfg.calendar
    calendar = {"segment_probabilities": ", ".join(repr(p) for p in cal.segment_probabilities)}
    for season in SEASONS:
        calendar[f"weather.{season}"] = ", ".join(repr(p) for p in cal.weather_probabilities[season])
    for day in sorted(cal.holidays):
        calendar[f"holiday.{day.isoformat()}"] = cal.holidays[day]
    parser["calendar"] = calendar
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def config_from_ini(text: str) -> SimConfig:
    parser = _parser()
    parser.read_string(text)
    cfg = SimConfig()

    if parser.has_section("simulation"):
        sec = parser["simulation"]
        if "start_date" in sec:
            cfg.start_date = date.fromisoformat(sec["start_date"])
        if "end_date" in sec:
            cfg.end_date = date.fromisoformat(sec["end_date"])
        for key in ("slots_per_day", "seed", "inventory_window_days"):
            if key in sec:
                setattr(cfg, key, int(sec[key]))
        for key in ("noise_mean", "noise_sd", "gamma", "delta", "tau", "z_score",
                    "market_level_phi", "market_level_sigma"):
            if key in sec:
                setattr(cfg, key, float(sec[key]))
        if "weekday_multipliers" in sec:
            cfg.weekday_multipliers = tuple(_floats(sec["weekday_multipliers"]))
        if "slot_periods" in sec:
            cfg.slot_periods = tuple(_strings(sec["slot_periods"]))

    for platform in PLATFORMS:
        section = f"platform.{platform}"
        if parser.has_section(section):
            sec = parser[section]
            params = cfg.platform_params[platform]
            if "alpha" in sec:
                params.alpha = float(sec["alpha"])
            if "beta" in sec:
                params.beta = float(sec["beta"])

    if parser.has_section("cyclical"):
        sec = parser["cyclical"]
        for key in ("amplitude", "period", "phase_shift", "baseline"):
            if key in sec:
                setattr(cfg.cyclical, key, float(sec[key]))

    if parser.has_section("leadtime"):
        sec = parser["leadtime"]
        ltm = cfg.lead_time_model
        for key in ("prep_log_mu", "prep_log_sigma"):
            if key in sec:
                setattr(ltm, key, float(sec[key]))
        if "distance_range_km" in sec:
            ltm.distance_range_km = tuple(_floats(sec["distance_range_km"]))
        bands = []
        for key in sorted(k for k in sec if k.startswith("band_")):
            lo, hi, mlo, mhi = _floats(sec[key])
            bands.append(DistanceBand(lo, hi, mlo, mhi))
        if bands:
            ltm.distance_bands = bands
        for period in DEMAND_PERIODS:
            key = f"arrival_{period}"
            if key in sec:
                lo, hi = _floats(sec[key])
                ltm.arrival_rate_ranges[period] = (lo, hi)

    if parser.has_section("price"):
        sec = parser["price"]
        pm = cfg.price_model
        for key in ("gst_multiplier", "small_order_threshold", "small_order_fee"):
            if key in sec:
                setattr(pm, key, float(sec[key]))
        for platform in PLATFORMS:
            for attr, prefix in (
                ("platform_fee", "platform_fee."),
                ("base_delivery_fee", "base_delivery_fee."),
                ("per_km_rate", "per_km_rate."),
            ):
                key = prefix + platform
                if key in sec:
                    getattr(pm, attr)[platform] = float(sec[key])
        prices = {k[len("base_price."):]: float(v) for k, v in sec.items()
                  if k.startswith("base_price.")}
        weights = {k[len("category_weight."):]: float(v) for k, v in sec.items()
                   if k.startswith("category_weight.")}
        if prices:
            pm.base_prices = prices
            if not weights:
                uniform = 1.0 / len(prices)
                weights = {name: uniform for name in prices}
        if weights:
            pm.category_weights = weights

    if parser.has_section("calendar"):
        sec = parser["calendar"]
        cal = cfg.calendar
        if "segment_probabilities" in sec:
            cal.segment_probabilities = tuple(_floats(sec["segment_probabilities"]))
        for season in SEASONS:
            key = f"weather.{season}"
            if key in sec:
                cal.weather_probabilities[season] = tuple(_floats(sec[key]))
        holidays = {}
        explicit = False
        for key, value in sec.items():
            if key.startswith("holiday."):
                explicit = True
                holidays[date.fromisoformat(key[len("holiday."):])] = value.strip()
        if explicit:
            cal.holidays = holidays

    cfg.calendar = cfg.calendar.restricted_to(cfg.start_date, cfg.end_date)
    cfg.validate()
    return cfg


def load_config(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_ini(fh.read())


def save_config(cfg: SimConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_ini(cfg))


def config_clone(cfg: SimConfig) -> SimConfig:
    """Deep copy through the INI representation (also exercises the round trip)."""
    return config_from_ini(config_to_ini(cfg))


def asdict(cfg: SimConfig) -> dict:
    return dataclasses.asdict(cfg)
