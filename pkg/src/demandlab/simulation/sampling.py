"""Stochastic building blocks of the demand simulator.

Pure functions: every random draw comes from a caller-supplied generator, so
the engine stays reproducible stream by stream.
"""

import math

import numpy as np

from demandlab.simulation.config import (
    ConfigError,
    CyclicalParams,
    ExternalContext,
    LeadTimeModel,
    PlatformParams,
    PriceModel,
    SimConfig,
)

# Composite-multiplier factor ranges. Keys follow the demand-period classes
# (time of day) and the categorical context values (weather / event / segment).
TIME_OF_DAY_RANGES = {
    "peak": (1.2, 1.5),
    "standard": (1.0, 1.2),
    "late_night": (0.8, 1.0),
}
WEATHER_RANGES = {
    "Clear": (1.0, 1.0),
    "Mild": (1.1, 1.3),
    "Extreme": (1.4, 1.6),
}
EVENT_RANGE = (1.2, 1.5)  # any holiday/special event; 1.0 on regular days
SEGMENT_RANGES = {
    "Mismatched": (0.7, 0.9),
    "General": (1.0, 1.0),
    "Loyal": (1.1, 1.2),
}

DEFAULT_SLOT_PERIODS = {
    "Morning": "peak",
    "Noon": "peak",
    "Evening": "standard",
    "Night": "standard",
    "Midnight": "late_night",
}


def cyclical_factor(slot_index: int, params: CyclicalParams) -> float:
    """Intra-day sinusoidal demand multiplier for slot 0..period."""
    return params.amplitude * math.sin(math.pi / params.period * slot_index
                                       + params.phase_shift) + params.baseline


def amplitude_from_volumes(peak_orders: float, offpeak_orders: float) -> tuple:
    """Derive (amplitude, baseline) of the intra-day sinusoid from order volumes.

    amplitude = (peak - offpeak) / (2 peak), baseline = (peak + offpeak) / (2 peak);
    the two always sum to 1.
    """
    if peak_orders <= 0:
        raise ValueError("peak order volume must be > 0")
    if offpeak_orders < 0 or offpeak_orders > peak_orders:
        raise ValueError("need peak_orders > offpeak_orders >= 0")
    amplitude = (peak_orders - offpeak_orders) / (2.0 * peak_orders)
    baseline = (peak_orders + offpeak_orders) / (2.0 * peak_orders)
    return amplitude, baseline


def _draw(rng: np.random.Generator, bounds: tuple) -> float:
    lo, hi = bounds
    if lo == hi:
        return lo
    return float(rng.uniform(lo, hi))


def seasonal_multiplier(ctx: ExternalContext, rng: np.random.Generator,
                        slot_periods: dict = None) -> float:
    """Composite multiplier F = time-of-day * weather * event * segment.

    Each factor is drawn uniformly from the range keyed by the context value;
    degenerate ranges (clear weather, regular day, general customer) are exact.
    """
    periods = slot_periods if slot_periods is not None else DEFAULT_SLOT_PERIODS
    t = _draw(rng, TIME_OF_DAY_RANGES[periods[ctx.time_slot]])
    w = _draw(rng, WEATHER_RANGES[ctx.weather])
    e = _draw(rng, EVENT_RANGE) if ctx.holiday else 1.0
    s = _draw(rng, SEGMENT_RANGES[ctx.customer_segment])
    return t * w * e * s


def lognormal_params_from_moments(mean: float, sd: float) -> tuple:
    """Log-space (mu, sigma) of the lognormal with the given arithmetic moments."""
    if mean <= 0 or sd <= 0:
        raise ValueError(f"mean and sd must be > 0, got ({mean}, {sd})")
    log_mu = math.log(mean * mean / math.sqrt(sd * sd + mean * mean))
    log_sigma = math.sqrt(math.log(1.0 + (sd * sd) / (mean * mean)))
    return log_mu, log_sigma


def lognormal_moments(log_mu: float, log_sigma: float) -> tuple:
    """Arithmetic (mean, sd) of Lognormal(log_mu, log_sigma); inverse of the above."""
    mean = math.exp(log_mu + 0.5 * log_sigma * log_sigma)
    sd = mean * math.sqrt(math.exp(log_sigma * log_sigma) - 1.0)
    return mean, sd


def sample_prep_time(model: LeadTimeModel, rng: np.random.Generator) -> float:
    """Food preparation minutes, lognormally distributed."""
    return float(rng.lognormal(model.prep_log_mu, model.prep_log_sigma))


def sample_delivery_time(distance_km: float, model: LeadTimeModel,
                         rng: np.random.Generator) -> float:
    """Delivery travel minutes, uniform within the band containing the distance."""
    for band in model.distance_bands:
        if band.lo_km <= distance_km < band.hi_km:
            return _draw(rng, (band.minutes_lo, band.minutes_hi))
    # Closed top edge: a distance equal to the last band's bound is still served.
    last = max(model.distance_bands, key=lambda b: b.hi_km)
    if distance_km == last.hi_km:
        return _draw(rng, (last.minutes_lo, last.minutes_hi))
    raise ConfigError(f"distance {distance_km} km outside all delivery bands")


def sample_interarrival(rate: float, rng: np.random.Generator) -> float:
    """Minutes between consecutive order arrivals at the given rate (orders/min)."""
    if rate <= 0:
        raise ValueError(f"arrival rate must be > 0, got {rate}")
    return float(rng.exponential(1.0 / rate))


def lead_time(prep_minutes: float, delivery_minutes: float) -> float:
    """Total lead time. With unlimited couriers there is no queueing term."""
    return prep_minutes + delivery_minutes


def price(platform: str, category: str, distance_km: float, model: PriceModel) -> float:
    """Checkout price: base*GST + platform fee + base delivery fee + per-km + small-order fee."""
    if category not in model.base_prices:
        raise KeyError(f"unknown food category {category!r}")
    base = model.base_prices[category]
    small = model.small_order_fee if base <= model.small_order_threshold else 0.0
    return (base * model.gst_multiplier
            + model.platform_fee[platform]
            + model.base_delivery_fee[platform]
            + model.per_km_rate[platform] * distance_km
            + small)


def _demand_terms(platform: PlatformParams, own_price: float, rival_price: float,
                  own_lead: float, rival_lead: float, epsilon: float,
                  cfg: SimConfig) -> float:
    return (platform.alpha
            - platform.beta * own_price
            - cfg.gamma * own_lead
            + cfg.tau * (rival_price - own_price)
            - cfg.delta * (own_lead - rival_lead)
            + epsilon)


def demand(platform: PlatformParams, own_price: float, rival_price: float,
           own_lead: float, rival_lead: float, f_multiplier: float,
           epsilon: float, cfg: SimConfig) -> float:
    """Platform order volume for one slot; negative excursions clamp to zero."""
    value, _ = demand_with_clamp(platform, own_price, rival_price, own_lead,
                                 rival_lead, f_multiplier, epsilon, cfg)
    return value


def demand_with_clamp(platform: PlatformParams, own_price: float, rival_price: float,
                      own_lead: float, rival_lead: float, f_multiplier: float,
                      epsilon: float, cfg: SimConfig) -> tuple:
    """(clamped demand, clamp flag); the flag feeds the run log."""
    raw = _demand_terms(platform, own_price, rival_price, own_lead, rival_lead,
                        epsilon, cfg) * f_multiplier
    if raw < 0.0:
        return 0.0, True
    return raw, False
