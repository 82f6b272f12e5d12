"""Demand laboratory for two competing online food-delivery platforms.

Generates a seeded two-year demand dataset with a discrete-event simulator,
trains stacked LSTM forecasters (intra-day and daily horizons) from scratch,
drives newsvendor order-up-to decisions from the forecasts, and quantifies
how much the forecast-driven inventory damps the bullwhip effect.
"""

__version__ = "0.1.0"
