"""Pipeline preparation tests: alignment, leakage, boundaries, config loading."""

from datetime import date

import numpy as np
import pytest

from demandlab.pipeline import (
    PipelineConfig,
    forecast_total_demand,
    load_run_configs,
    prepare_phase_data,
)
from demandlab.preprocess import SplitSpec
from demandlab.simulation.config import default_config
from demandlab.simulation.engine import run_simulation
from demandlab.lstm.training import train
from demandlab.tuning import HyperParams


@pytest.fixture(scope="module")
def world():
    cfg = default_config(start_date=date(2023, 1, 1), end_date=date(2023, 4, 10), seed=17)
    return run_simulation(cfg)


def test_phase1_target_alignment_recovers_raw_demand(world):
    data = prepare_phase_data(world, SplitSpec(), 1, "zomato")
    raw = world.demand_matrix("zomato")
    for windowed in (data.train_w, data.val_w, data.test_w):
        recovered = data.scaler.inverse_column("demand_zomato", windowed.Y)
        assert np.allclose(recovered, raw[windowed.sample_days], atol=1e-9)


def test_phase1_windows_respect_split_boundaries(world):
    split = SplitSpec()
    n_train, n_val, _ = split.resolve(world.n_days)
    data = prepare_phase_data(world, split, 1, "swiggy", phase1_window_days=2)
    assert data.train_w.sample_days.min() == 2
    assert data.train_w.sample_days.max() == n_train - 1
    assert data.val_w.sample_days.min() == n_train + 2
    assert data.test_w.sample_days.min() == n_train + n_val + 2
    assert data.test_w.sample_days.max() == world.n_days - 1


def test_phase1_training_features_standardized(world):
    data = prepare_phase_data(world, SplitSpec(), 1, "zomato")
    assert data.scaler.segment == "train"
    n_scaled = len(data.schema.scaled_features)
    # every scaled channel over the train windows is ~N(0,1); the one-hot block
    # is untouched binary
    flat = data.train_w.X.reshape(-1, data.train_w.X.shape[-1])
    assert np.all(np.abs(flat[:, :n_scaled].mean(axis=0)) < 0.2)
    onehot = flat[:, n_scaled + 1:]
    assert set(np.unique(onehot)) <= {0.0, 1.0}


def test_phase2_round_trip_and_boundaries(world):
    split = SplitSpec()
    n_train, n_val, _ = split.resolve(world.n_days)
    data = prepare_phase_data(world, split, 2, "zomato")
    daily = world.demand_matrix("zomato").mean(axis=1)
    recovered = data.invert_outputs(data.test_w.Y).reshape(-1)
    assert np.allclose(recovered, daily[data.test_w.sample_days], atol=1e-9)
    assert data.train_w.sample_days.min() == 6
    assert data.test_w.sample_days.min() == n_train + n_val + 6


def test_raw_targets_match_dataset(world):
    data = prepare_phase_data(world, SplitSpec(), 1, "zomato")
    raw = data.raw_targets("test")
    assert np.allclose(raw, world.demand_matrix("zomato")[data.test_w.sample_days])


def test_forecast_total_requires_alignment(world):
    split = SplitSpec()
    hp = HyperParams(epochs=50, units=32, batch_size=32, dropout=0.1,
                     learning_rate=0.005, layers=1)
    networks = {}
    for platform in ("zomato", "swiggy"):
        data = prepare_phase_data(world, split, 2, platform)
        networks[platform], _ = train(data.train_w, data.val_w, hp, seed=3)
    days, totals = forecast_total_demand(world, split, 2, networks)
    assert totals.shape == days.shape
    data = prepare_phase_data(world, split, 2, "zomato")
    assert np.array_equal(days, data.test_w.sample_days)
    # totals are the sum of two positive forecasts at sane magnitudes
    assert np.all(totals > 0)


def test_load_run_configs(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("""
[simulation]
start_date = 2023-01-01
end_date = 2023-06-30
seed = 5

[split]
train_fraction = 0.6
validation_fraction = 0.2
test_fraction = 0.2

[grid]
epochs = 50
units = 32, 64
layers = 1

[pipeline]
phases = 2
platforms = zomato
grid_preset = coarse
plan_window_days = 4
""")
    sim_cfg, split, grid, pipe = load_run_configs(path)
    assert sim_cfg.seed == 5
    assert split.train_fraction == 0.6
    assert grid.epochs == [50]
    assert grid.units == [32, 64]
    assert grid.layers == [1]
    assert grid.batch_size == [16, 32]  # coarse preset fills unlisted axes
    assert pipe.phases == [2]
    assert pipe.platforms == ["zomato"]
    assert pipe.plan_window_days == 4


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(phases=[3]).validate()
    with pytest.raises(ValueError):
        PipelineConfig(platforms=["ubereats"]).validate()
    with pytest.raises(ValueError):
        PipelineConfig(plan_window_days=1).validate()
