"""Grid-search tests: enumeration, determinism, order invariance, tie-breaks."""

import math

import numpy as np
import pytest

from demandlab.preprocess import WindowedDataset
from demandlab.tuning import (
    GridSearchError,
    HyperGrid,
    HyperParams,
    TrialResult,
    enumerate_grid,
    grid_search,
    run_trial,
    select_best,
)


def toy_sets(n=60, seed=0):
    rng = np.random.default_rng(seed)
    starts = rng.uniform(0, 2 * math.pi, size=n)
    t = np.arange(7) * 0.5
    waves = np.sin(starts[:, None] + t[None, :])
    w = WindowedDataset(2, waves[:, :6, None], waves[:, 6:], np.arange(n))
    half = n // 2
    train = WindowedDataset(2, w.X[:half], w.Y[:half], w.sample_days[:half])
    val = WindowedDataset(2, w.X[half:], w.Y[half:], w.sample_days[half:])
    return train, val


def small_grid():
    return HyperGrid(epochs=[50], units=[32], batch_size=[16, 32],
                     dropout=[0.1], learning_rate=[0.001, 0.005], layers=[1, 2])


class TestHyperParams:
    def test_ranges_enforced(self):
        with pytest.raises(ValueError):
            HyperParams(epochs=10, units=32, batch_size=16, dropout=0.1,
                        learning_rate=0.001, layers=1)
        with pytest.raises(ValueError):
            HyperParams(epochs=50, units=32, batch_size=16, dropout=0.6,
                        learning_rate=0.001, layers=1)
        with pytest.raises(ValueError):
            HyperParams(epochs=50, units=32, batch_size=16, dropout=0.1,
                        learning_rate=0.001, layers=4)

    def test_valid_boundaries(self):
        HyperParams(epochs=200, units=128, batch_size=64, dropout=0.5,
                    learning_rate=0.01, layers=3)


class TestEnumerateGrid:
    def test_default_grid_cardinality(self):
        grid = HyperGrid()
        assert grid.cardinality == 3**6 == 729
        assert len(enumerate_grid(grid)) == 729

    def test_coarse_preset_cardinality(self):
        grid = HyperGrid.coarse()
        assert grid.cardinality == 2**6 == 64
        assert len(enumerate_grid(grid)) == 64

    def test_single_combination(self):
        hp = HyperParams(epochs=50, units=32, batch_size=16, dropout=0.1,
                         learning_rate=0.001, layers=1)
        combos = enumerate_grid(HyperGrid.single(hp))
        assert combos == [hp]

    def test_lexicographic_order_is_stable(self):
        combos = enumerate_grid(small_grid())
        assert combos == enumerate_grid(small_grid())
        assert combos[0].batch_size == 16 and combos[0].learning_rate == 0.001
        assert combos[-1].batch_size == 32 and combos[-1].layers == 2

    def test_empty_axis_rejected(self):
        grid = small_grid()
        grid.units = []
        with pytest.raises(GridSearchError):
            enumerate_grid(grid)


class TestSelection:
    def make_result(self, index, loss, layers=1, units=32, diverged=False):
        hp = HyperParams(epochs=50, units=units, batch_size=16, dropout=0.1,
                         learning_rate=0.001, layers=layers)
        return TrialResult(index, hp, loss, [loss], 0.0, index, diverged)

    def test_argmin_wins(self):
        results = [self.make_result(0, 0.5), self.make_result(1, 0.2),
                   self.make_result(2, 0.9)]
        assert select_best(results).index == 1

    def test_tie_break_prefers_smaller_model(self):
        results = [self.make_result(0, 0.5, layers=3, units=128),
                   self.make_result(1, 0.5, layers=1, units=64),
                   self.make_result(2, 0.5, layers=1, units=32)]
        assert select_best(results).index == 2

    def test_tie_break_falls_back_to_enumeration_order(self):
        results = [self.make_result(1, 0.5), self.make_result(0, 0.5)]
        assert select_best(results).index == 0

    def test_diverged_trials_are_skipped(self):
        results = [self.make_result(0, float("inf"), diverged=True),
                   self.make_result(1, 0.7)]
        assert select_best(results).index == 1

    def test_all_diverged_is_an_error(self):
        results = [self.make_result(0, float("inf"), diverged=True)]
        with pytest.raises(GridSearchError):
            select_best(results)


class TestGridSearch:
    def test_single_combination_becomes_best(self):
        train_set, val_set = toy_sets()
        hp = HyperParams(epochs=50, units=32, batch_size=32, dropout=0.1,
                         learning_rate=0.005, layers=1)
        best, results = grid_search(train_set, val_set, HyperGrid.single(hp), 7)
        assert len(results) == 1
        assert best.hyperparams == hp

    def test_completeness(self):
        train_set, val_set = toy_sets()
        grid = HyperGrid(epochs=[50], units=[32], batch_size=[32],
                         dropout=[0.1], learning_rate=[0.001, 0.005], layers=[1])
        _, results = grid_search(train_set, val_set, grid, 11)
        assert len(results) == grid.cardinality
        assert [r.index for r in results] == list(range(grid.cardinality))
        assert all(len(r.val_loss_curve) == r.hyperparams.epochs for r in results)

    def test_rerun_is_deterministic(self):
        train_set, val_set = toy_sets()
        grid = HyperGrid(epochs=[50], units=[32], batch_size=[16, 32],
                         dropout=[0.1], learning_rate=[0.005], layers=[1])
        best1, results1 = grid_search(train_set, val_set, grid, 99)
        best2, results2 = grid_search(train_set, val_set, grid, 99)
        assert best1.hyperparams == best2.hyperparams
        assert [r.final_val_loss for r in results1] == [r.final_val_loss for r in results2]

    def test_order_invariance_under_permuted_execution(self):
        train_set, val_set = toy_sets()
        grid = HyperGrid(epochs=[50], units=[32], batch_size=[16, 32],
                         dropout=[0.1, 0.3], learning_rate=[0.005], layers=[1, 2])
        combos = enumerate_grid(grid)
        assert len(combos) == 8
        base_seed = 123
        order = np.random.default_rng(5).permutation(len(combos))
        permuted = [None] * len(combos)
        for position in order:
            permuted[position] = run_trial(train_set, val_set, combos[position],
                                           base_seed, position)
        best_permuted = select_best(permuted)
        best_sequential, sequential = grid_search(train_set, val_set, grid, base_seed)
        assert best_permuted.hyperparams == best_sequential.hyperparams
        assert best_permuted.final_val_loss == best_sequential.final_val_loss
        for a, b in zip(permuted, sequential):
            assert a.final_val_loss == b.final_val_loss
            assert a.seed == b.seed

    def test_trial_seeds_are_index_derived_and_distinct(self):
        train_set, val_set = toy_sets()
        grid = HyperGrid(epochs=[50], units=[32], batch_size=[16, 32],
                         dropout=[0.1], learning_rate=[0.005], layers=[1])
        _, results = grid_search(train_set, val_set, grid, 321)
        seeds = [r.seed for r in results]
        assert len(set(seeds)) == len(seeds)
