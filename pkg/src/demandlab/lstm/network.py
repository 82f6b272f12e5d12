"""Stacked LSTM with a linear head, written directly on numpy.

Forward pass caches every gate pre-image so the backward pass can unroll the
exact gradient through time; no truncation is applied (sequences here are at
most a few dozen steps).
"""

from dataclasses import dataclass, field

import numpy as np

GATES = ("i", "f", "o", "g")  # input, forget, output, candidate


def sigmoid(x):
    """Logistic function, stable across the full float range."""
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out) if np.isscalar(x) else out


def tanh(x):
    value = np.tanh(x)
    return float(value) if np.isscalar(x) else value


@dataclass
class NetworkConfig:
    layer_sizes: list
    input_dim: int
    output_dim: int
    dropout_rate: float = 0.0

    def __post_init__(self):
        if not self.layer_sizes or any(u < 1 for u in self.layer_sizes):
            raise ValueError(f"bad layer sizes {self.layer_sizes}")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.dropout_rate}")

    def layer_input_dim(self, layer: int) -> int:
        return self.input_dim if layer == 0 else self.layer_sizes[layer - 1]


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, batch: int, units: int) -> "LstmState":
        return cls(np.zeros((batch, units)), np.zeros((batch, units)))


@dataclass
class LayerWeights:
    """Per-gate recurrent matrix [U x U], input matrix [U x in], bias [U]."""

    w_h: dict = field(default_factory=dict)
    w_x: dict = field(default_factory=dict)
    b: dict = field(default_factory=dict)

    @classmethod
    def view(cls, params: dict, layer: int) -> "LayerWeights":
        prefix = f"lstm{layer}"
        return cls(
            w_h={g: params[f"{prefix}.{g}.w_h"] for g in GATES},
            w_x={g: params[f"{prefix}.{g}.w_x"] for g in GATES},
            b={g: params[f"{prefix}.{g}.b"] for g in GATES},
        )


def init_params(net: NetworkConfig, rng: np.random.Generator) -> dict:
    """Glorot-uniform matrices; forget-gate bias starts at 1 so memory survives early training."""
    params = {}
    for layer, units in enumerate(net.layer_sizes):
        in_dim = net.layer_input_dim(layer)
        for gate in GATES:
            params[f"lstm{layer}.{gate}.w_h"] = _glorot(rng, units, units)
            params[f"lstm{layer}.{gate}.w_x"] = _glorot(rng, units, in_dim)
            bias = np.zeros(units)
            if gate == "f":
                bias[:] = 1.0
            params[f"lstm{layer}.{gate}.b"] = bias
    last = net.layer_sizes[-1]
    params["dense.w"] = _glorot(rng, net.output_dim, last)
    params["dense.b"] = np.zeros(net.output_dim)
    return params


def _glorot(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def cell_forward(x_t: np.ndarray, prev: LstmState, w: LayerWeights):
    """One LSTM step on a [batch x dim] input; returns the new state and the BPTT cache."""
    x_t = np.atleast_2d(np.asarray(x_t, dtype=float))
    if x_t.shape[1] != w.w_x["i"].shape[1]:
        raise ValueError(f"input dim {x_t.shape[1]} does not match weights "
                         f"{w.w_x['i'].shape[1]}")
    if prev.h.shape != prev.c.shape or prev.h.shape[1] != w.w_h["i"].shape[0]:
        raise ValueError("state shape does not match weights")
    pre = {g: prev.h @ w.w_h[g].T + x_t @ w.w_x[g].T + w.b[g] for g in GATES}
    i = sigmoid(pre["i"])
    f = sigmoid(pre["f"])
    o = sigmoid(pre["o"])
    g = np.tanh(pre["g"])
    c = f * prev.c + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = {"x": x_t, "h_prev": prev.h, "c_prev": prev.c,
             "i": i, "f": f, "o": o, "g": g, "tanh_c": tanh_c}
    return LstmState(h, c), cache


def forward(params: dict, net: NetworkConfig, x: np.ndarray, mode: str = "infer",
            dropout_rng: np.random.Generator = None):
    """Run the stack over a [batch x timesteps x features] tensor.

    Inverted dropout is applied between stacked layers in train mode only, so
    inference needs no rescaling and is fully deterministic.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ValueError("forward expects [batch x timesteps x features]")
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    batch, timesteps, _ = x.shape
    n_layers = len(net.layer_sizes)
    caches = []
    sequence = x
    for layer, units in enumerate(net.layer_sizes):
        weights = LayerWeights.view(params, layer)
        state = LstmState.zeros(batch, units)
        cells = []
        outputs = np.zeros((batch, timesteps, units))
        for t in range(timesteps):
            state, cell_cache = cell_forward(sequence[:, t, :], state, weights)
            cells.append(cell_cache)
            outputs[:, t, :] = state.h
        mask = None
        if mode == "train" and net.dropout_rate > 0.0 and layer < n_layers - 1:
            if dropout_rng is None:
                raise ValueError("train-mode dropout requires a generator")
            keep = 1.0 - net.dropout_rate
            mask = (dropout_rng.random(outputs.shape) < keep) / keep
            outputs = outputs * mask
        caches.append({"cells": cells, "mask": mask})
        sequence = outputs
    h_last = sequence[:, -1, :]
    y = h_last @ params["dense.w"].T + params["dense.b"]
    caches.append({"h_last": h_last})
    return y, caches


def network_forward(sequence: np.ndarray, net: NetworkConfig, params: dict,
                    mode: str = "infer", rng: np.random.Generator = None) -> np.ndarray:
    """Prediction for a single [timesteps x features] sequence (or a batch of them)."""
    arr = np.asarray(sequence, dtype=float)
    single = arr.ndim == 2
    if single:
        arr = arr[None, :, :]
    y, _ = forward(params, net, arr, mode=mode, dropout_rng=rng)
    return y[0] if single else y


def loss_mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean of squared differences over every output entry."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def backward(params: dict, net: NetworkConfig, caches: list, d_out: np.ndarray) -> dict:
    """Gradients of every parameter given d(loss)/d(prediction)."""
    if not caches or "h_last" not in caches[-1]:
        raise ValueError("missing forward caches")
    d_out = np.asarray(d_out, dtype=float)
    h_last = caches[-1]["h_last"]
    grads = {key: np.zeros_like(value) for key, value in params.items()}
    grads["dense.w"] = d_out.T @ h_last
    grads["dense.b"] = d_out.sum(axis=0)
    d_h_last = d_out @ params["dense.w"]

    batch = d_out.shape[0]
    timesteps = len(caches[0]["cells"])
    # Gradient w.r.t. the top layer's (possibly masked) output sequence.
    d_seq = np.zeros((batch, timesteps, net.layer_sizes[-1]))
    d_seq[:, -1, :] = d_h_last

    for layer in range(len(net.layer_sizes) - 1, -1, -1):
        layer_cache = caches[layer]
        if layer_cache["mask"] is not None:
            d_seq = d_seq * layer_cache["mask"]
        weights = LayerWeights.view(params, layer)
        units = net.layer_sizes[layer]
        in_dim = net.layer_input_dim(layer)
        d_h_next = np.zeros((batch, units))
        d_c_next = np.zeros((batch, units))
        d_inputs = np.zeros((batch, timesteps, in_dim))
        prefix = f"lstm{layer}"
        for t in range(timesteps - 1, -1, -1):
            cell = layer_cache["cells"][t]
            d_h = d_seq[:, t, :] + d_h_next
            tanh_c = cell["tanh_c"]
            d_c = d_c_next + d_h * cell["o"] * (1.0 - tanh_c * tanh_c)
            d_pre = {
                "o": d_h * tanh_c * cell["o"] * (1.0 - cell["o"]),
                "i": d_c * cell["g"] * cell["i"] * (1.0 - cell["i"]),
                "f": d_c * cell["c_prev"] * cell["f"] * (1.0 - cell["f"]),
                "g": d_c * cell["i"] * (1.0 - cell["g"] * cell["g"]),
            }
            d_h_next = np.zeros((batch, units))
            d_x = np.zeros((batch, in_dim))
            for gate in GATES:
                dz = d_pre[gate]
                grads[f"{prefix}.{gate}.w_h"] += dz.T @ cell["h_prev"]
                grads[f"{prefix}.{gate}.w_x"] += dz.T @ cell["x"]
                grads[f"{prefix}.{gate}.b"] += dz.sum(axis=0)
                d_h_next += dz @ weights.w_h[gate]
                d_x += dz @ weights.w_x[gate]
            d_c_next = d_c * cell["f"]
            d_inputs[:, t, :] = d_x
        d_seq = d_inputs
    return grads


def loss_and_grads(params: dict, net: NetworkConfig, x: np.ndarray, y: np.ndarray,
                   mode: str = "train", dropout_rng: np.random.Generator = None):
    """One forward/backward sweep; returns (mse, gradient dict)."""
    pred, caches = forward(params, net, x, mode=mode, dropout_rng=dropout_rng)
    loss = loss_mse(pred, y)
    d_out = 2.0 * (pred - np.asarray(y, dtype=float)) / pred.size
    grads = backward(params, net, caches, d_out)
    return loss, grads
