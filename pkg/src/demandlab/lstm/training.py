"""Mini-batch training loop for the stacked LSTM."""

import hashlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from demandlab import seeding
from demandlab.lstm.network import (
    NetworkConfig,
    forward,
    init_params,
    loss_and_grads,
    loss_mse,
)
from demandlab.lstm.optimizer import adam_step, clip_global_norm, init_adam

log = logging.getLogger(__name__)

GRADIENT_CLIP_NORM = 5.0


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the epoch and batch where it happened."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}, "
                         f"batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class LstmNetwork:
    config: NetworkConfig
    params: dict

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Deterministic inference on a [batch x timesteps x features] tensor."""
        y, _ = forward(self.params, self.config, x, mode="infer")
        return y

    def snapshot_id(self) -> str:
        digest = hashlib.sha256()
        for key in sorted(self.params):
            digest.update(key.encode("utf-8"))
            digest.update(np.ascontiguousarray(self.params[key], dtype="<f8").tobytes())
        return digest.hexdigest()[:12]


@dataclass
class TrainReport:
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    seconds: float = 0.0
    snapshot_id: str = ""
    epochs: int = 0


def train(train_set, val_set, hp, seed: int):
    """Train a network per the hyperparameters; returns (LstmNetwork, TrainReport).

    `hp` needs epochs, units, layers, batch_size, dropout and learning_rate
    attributes. The run is a pure function of (data, hp, seed) on one thread;
    the final short batch of each epoch is included.
    """
    if train_set.n_samples == 0 or val_set.n_samples == 0:
        raise ValueError("train and validation sets must be non-empty")
    x_train, y_train = train_set.X, train_set.Y
    net = NetworkConfig(
        layer_sizes=[hp.units] * hp.layers,
        input_dim=x_train.shape[2],
        output_dim=y_train.shape[1],
        dropout_rate=hp.dropout,
    )
    params = init_params(net, seeding.stream(seed, "lstm/init"))
    shuffle_rng = seeding.stream(seed, "lstm/shuffle")
    dropout_rng = seeding.stream(seed, "lstm/dropout")
    adam = init_adam(params)
    report = TrainReport(epochs=hp.epochs)

    started = time.perf_counter()
    n = train_set.n_samples
    for epoch in range(hp.epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for batch_index, start in enumerate(range(0, n, hp.batch_size)):
            take = order[start:start + hp.batch_size]
            loss, grads = loss_and_grads(params, net, x_train[take], y_train[take],
                                         mode="train", dropout_rng=dropout_rng)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, batch_index)
            clip_global_norm(grads, GRADIENT_CLIP_NORM)
            adam_step(params, grads, adam, hp.learning_rate)
            epoch_loss += loss * len(take)
        val_pred, _ = forward(params, net, val_set.X, mode="infer")
        val_loss = loss_mse(val_pred, val_set.Y)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(epoch, -1)
        report.train_losses.append(epoch_loss / n)
        report.val_losses.append(val_loss)

    report.seconds = time.perf_counter() - started
    network = LstmNetwork(net, params)
    report.snapshot_id = network.snapshot_id()
    return network, report
