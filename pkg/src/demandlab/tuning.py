"""Exhaustive hyperparameter grid search selecting by final validation loss."""

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field

from demandlab import seeding
from demandlab.lstm.training import TrainingDiverged, train

log = logging.getLogger(__name__)

_RANGES = {
    "epochs": (50, 200),
    "units": (32, 128),
    "batch_size": (16, 64),
    "dropout": (0.1, 0.5),
    "learning_rate": (0.001, 0.01),
    "layers": (1, 3),
}


class GridSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class HyperParams:
    epochs: int
    units: int
    batch_size: int
    dropout: float
    learning_rate: float
    layers: int

    def __post_init__(self):
        for name, (lo, hi) in _RANGES.items():
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise ValueError(f"{name}={value} outside allowed range [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class HyperGrid:
    """Discrete value lists per hyperparameter axis."""

    epochs: list = field(default_factory=lambda: [50, 100, 200])
    units: list = field(default_factory=lambda: [32, 64, 128])
    batch_size: list = field(default_factory=lambda: [16, 32, 64])
    dropout: list = field(default_factory=lambda: [0.1, 0.3, 0.5])
    learning_rate: list = field(default_factory=lambda: [0.001, 0.005, 0.01])
    layers: list = field(default_factory=lambda: [1, 2, 3])

    @classmethod
    def coarse(cls) -> "HyperGrid":
        """Two values per axis (64 combinations); the desk-scale default."""
        return cls(epochs=[50, 100], units=[32, 64], batch_size=[16, 32],
                   dropout=[0.1, 0.3], learning_rate=[0.001, 0.005], layers=[1, 2])

    @classmethod
    def single(cls, hp: HyperParams) -> "HyperGrid":
        return cls(epochs=[hp.epochs], units=[hp.units], batch_size=[hp.batch_size],
                   dropout=[hp.dropout], learning_rate=[hp.learning_rate],
                   layers=[hp.layers])

    def axes(self) -> dict:
        return {"epochs": self.epochs, "units": self.units, "batch_size": self.batch_size,
                "dropout": self.dropout, "learning_rate": self.learning_rate,
                "layers": self.layers}

    @property
    def cardinality(self) -> int:
        return math.prod(len(v) for v in self.axes().values())


def enumerate_grid(grid: HyperGrid) -> list:
    """Cartesian product of the grid axes in deterministic lexicographic order."""
    axes = grid.axes()
    for name, values in axes.items():
        if not values:
            raise GridSearchError(f"empty grid axis {name!r}")
    combos = []
    for values in itertools.product(*axes.values()):
        combos.append(HyperParams(**dict(zip(axes.keys(), values))))
    return combos


@dataclass
class TrialResult:
    index: int
    hyperparams: HyperParams
    final_val_loss: float
    val_loss_curve: list
    seconds: float
    seed: int
    diverged: bool = False

    def sort_key(self):
        # Ties favour smaller models, then earlier enumeration order.
        return (self.final_val_loss, self.hyperparams.layers, self.hyperparams.units,
                self.index)


def run_trial(train_set, val_set, hp: HyperParams, base_seed: int, index: int) -> TrialResult:
    """Train one configuration under its index-derived seed."""
    trial_seed = seeding.derive_seed(base_seed, "trial", index)
    try:
        _, report = train(train_set, val_set, hp, trial_seed)
    except TrainingDiverged as exc:
        log.warning("trial %d diverged: %s", index, exc)
        return TrialResult(index, hp, float("inf"), [], 0.0, trial_seed, diverged=True)
    return TrialResult(index, hp, report.val_losses[-1] if report.val_losses else float("inf"),
                       list(report.val_losses), report.seconds, trial_seed)


def select_best(results: list) -> TrialResult:
    usable = [r for r in results if not r.diverged and math.isfinite(r.final_val_loss)]
    if not usable:
        raise GridSearchError("every grid trial diverged")
    return min(usable, key=TrialResult.sort_key)


def grid_search(train_set, val_set, grid: HyperGrid, base_seed: int,
                progress: bool = False):
    """Train every combination; returns (best TrialResult, all TrialResults).

    Per-trial seeds derive from (base_seed, trial index), and selection is a
    pure argmin with a deterministic tie-break, so the outcome is independent
    of trial execution order.
    """
    combos = enumerate_grid(grid)
    results = []
    for index, hp in enumerate(combos):
        result = run_trial(train_set, val_set, hp, base_seed, index)
        results.append(result)
        if progress:
            log.info("trial %d/%d %s -> val loss %.6f%s", index + 1, len(combos),
                     hp.to_dict(), result.final_val_loss,
                     " (diverged)" if result.diverged else "")
    return select_best(results), results
