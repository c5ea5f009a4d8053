"""JSON-safe encodings of arrays and model parameters.

Floats are written with Python's shortest round-trip repr, so a save/load
cycle reproduces every parameter bit for bit.
"""

from __future__ import annotations

import numpy as np

from .exceptions import CheckpointError, ChemGraphError
from .gnn import GcnLayerParams, GnnModel, GraphNetsLayerParams
from .nn import MlpParams


def array_to_json(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def array_from_json(d) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in d["shape"])
        data = np.asarray(d["data"], dtype=float)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed array entry: {exc}") from None


def mlp_to_dict(p: MlpParams) -> dict:
    return {"activation": p.activation,
            "layers": [{"W": array_to_json(W), "b": array_to_json(b)} for W, b in p.layers]}


def mlp_from_dict(d) -> MlpParams:
    try:
        layers = tuple((array_from_json(l["W"]), array_from_json(l["b"])) for l in d["layers"])
        return MlpParams(layers, d["activation"])
    except CheckpointError:
        raise
    except (ChemGraphError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"invalid MLP parameters: {exc}") from None


def model_to_dict(m: GnnModel) -> dict:
    layers = []
    for layer in m.layers:
        if isinstance(layer, GcnLayerParams):
            layers.append({"type": "gcn", "W": array_to_json(layer.W), "activation": layer.activation})
        else:
            layers.append({"type": "graphnets", "aggregator": layer.aggregator,
                           "edge_mlp": mlp_to_dict(layer.edge_mlp),
                           "node_mlp": mlp_to_dict(layer.node_mlp),
                           "global_mlp": mlp_to_dict(layer.global_mlp)})
    return {"task": m.task, "input_widths": list(m.input_widths), "pool_nodes": m.pool_nodes,
            "layers": layers, "head": mlp_to_dict(m.head)}


def model_from_dict(d) -> GnnModel:
    """Rebuild a model; any break in the width chain raises CheckpointError."""
    try:
        layers = []
        for entry in d["layers"]:
            if entry["type"] == "gcn":
                layers.append(GcnLayerParams(array_from_json(entry["W"]), entry["activation"]))
            elif entry["type"] == "graphnets":
                layers.append(GraphNetsLayerParams(mlp_from_dict(entry["edge_mlp"]),
                                                   mlp_from_dict(entry["node_mlp"]),
                                                   mlp_from_dict(entry["global_mlp"]),
                                                   entry["aggregator"]))
            else:
                raise CheckpointError(f"unknown layer type {entry['type']!r}")
        return GnnModel(tuple(layers), mlp_from_dict(d["head"]), d["task"],
                        tuple(d["input_widths"]), bool(d.get("pool_nodes", False)))
    except CheckpointError:
        raise
    except (ChemGraphError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"invalid model: {exc}") from None
