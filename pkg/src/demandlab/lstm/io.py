"""Versioned text container for trained models.

JSON keeps float64 values exact (repr round-trip), so save -> load -> forward
reproduces the original predictions bit for bit.
"""

import json

import numpy as np

from demandlab.lstm.network import GATES, NetworkConfig
from demandlab.lstm.training import LstmNetwork

FORMAT = "demandlab-model"
VERSION = 1


class ModelFormatError(ValueError):
    pass


def _expected_shapes(net: NetworkConfig) -> dict:
    shapes = {}
    for layer, units in enumerate(net.layer_sizes):
        in_dim = net.layer_input_dim(layer)
        for gate in GATES:
            shapes[f"lstm{layer}.{gate}.w_h"] = (units, units)
            shapes[f"lstm{layer}.{gate}.w_x"] = (units, in_dim)
            shapes[f"lstm{layer}.{gate}.b"] = (units,)
    shapes["dense.w"] = (net.output_dim, net.layer_sizes[-1])
    shapes["dense.b"] = (net.output_dim,)
    return shapes


def save_model(path, network: LstmNetwork, scaler: dict = None, seed: int = None,
               hyperparams: dict = None, metadata: dict = None) -> None:
    net = network.config
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": {
            "layer_sizes": list(net.layer_sizes),
            "input_dim": net.input_dim,
            "output_dim": net.output_dim,
            "dropout_rate": net.dropout_rate,
        },
        "params": {
            key: {"shape": list(value.shape), "data": np.asarray(value).reshape(-1).tolist()}
            for key, value in network.params.items()
        },
        "scaler": scaler,
        "seed": seed,
        "hyperparams": hyperparams,
        "metadata": metadata or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    """Returns (LstmNetwork, document dict); shapes are validated before use."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise ModelFormatError(f"{path}: not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"{path}: unsupported version {doc.get('version')}")
    cfg = doc["config"]
    net = NetworkConfig(layer_sizes=list(cfg["layer_sizes"]), input_dim=cfg["input_dim"],
                        output_dim=cfg["output_dim"], dropout_rate=cfg["dropout_rate"])
    expected = _expected_shapes(net)
    params = {}
    for key, entry in doc["params"].items():
        if key not in expected:
            raise ModelFormatError(f"{path}: unexpected parameter {key!r}")
        shape = tuple(entry["shape"])
        if shape != expected[key]:
            raise ModelFormatError(f"{path}: parameter {key!r} has shape {shape}, "
                                   f"expected {expected[key]}")
        params[key] = np.asarray(entry["data"], dtype=float).reshape(shape)
    missing = set(expected) - set(params)
    if missing:
        raise ModelFormatError(f"{path}: missing parameters {sorted(missing)}")
    return LstmNetwork(net, params), doc
