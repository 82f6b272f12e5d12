from demandlab.lstm.network import (
    LayerWeights,
    LstmState,
    NetworkConfig,
    backward,
    cell_forward,
    forward,
    init_params,
    loss_and_grads,
    loss_mse,
    network_forward,
    sigmoid,
    tanh,
)
from demandlab.lstm.optimizer import AdamState, adam_step, clip_global_norm, init_adam
from demandlab.lstm.training import LstmNetwork, TrainingDiverged, TrainReport, train
from demandlab.lstm.io import load_model, save_model

__all__ = [
    "AdamState",
    "LayerWeights",
    "LstmNetwork",
    "LstmState",
    "NetworkConfig",
    "TrainReport",
    "TrainingDiverged",
    "adam_step",
    "backward",
    "cell_forward",
    "clip_global_norm",
    "forward",
    "init_adam",
    "init_params",
    "load_model",
    "loss_and_grads",
    "loss_mse",
    "network_forward",
    "save_model",
    "sigmoid",
    "tanh",
    "train",
]
