"""scikit-learn compatible wrappers.

Feature-based regressors take an ``n x d`` array; graph regressors take a
list of :class:`GraphTensor`. Transformers map graph lists to feature
arrays, so ``make_pipeline(GlobalFeatures(), LinearRegressor())`` works on
graphs directly.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import baselines, featurize, gnn
from .exceptions import ShapeError
from .graph import GraphTensor, check_graph
from .nn import init_mlp, mlp_forward, train_mlp
from .serialize import (array_from_json, array_to_json, mlp_from_dict, mlp_to_dict, model_from_dict,
                        model_to_dict)


def check_graphs(graphs, *, min_graphs: int = 1) -> list[GraphTensor]:
    """Validate a sequence of graphs with one shared set of feature widths."""
    if isinstance(graphs, GraphTensor):
        graphs = [graphs]
    graphs = list(graphs)
    if len(graphs) < min_graphs:
        raise ValueError(f"expected at least {min_graphs} graph(s), got {len(graphs)}")
    for i, g in enumerate(graphs):
        if not isinstance(g, GraphTensor):
            raise TypeError(f"item {i} is {type(g).__name__}, not a GraphTensor")
        check_graph(g)
    widths = {(g.X.shape[1], g.E.shape[1], g.U.shape[1]) for g in graphs}
    if len(widths) > 1:
        raise ShapeError(f"graphs have different (node, edge, global) widths: {sorted(widths)}")
    return graphs


class _Standardizer:
    """Column mean/std scaling; constant columns are only centred."""

    def __init__(self, mean, scale):
        self.mean = np.asarray(mean, dtype=float).reshape(1, -1)
        self.scale = np.asarray(scale, dtype=float).reshape(1, -1)

    @classmethod
    def fit(cls, rows, enabled=True):
        rows = np.asarray(rows, dtype=float)
        if not enabled or rows.shape[0] == 0:
            return cls(np.zeros(rows.shape[1]), np.ones(rows.shape[1]))
        std = rows.std(axis=0)
        return cls(rows.mean(axis=0), np.where(std > 0, std, 1.0))

    def forward(self, rows):
        return (rows - self.mean) / self.scale

    def inverse(self, rows):
        return rows * self.scale + self.mean

    def to_json(self):
        return {"mean": array_to_json(self.mean), "scale": array_to_json(self.scale)}

    @classmethod
    def from_json(cls, d):
        return cls(array_from_json(d["mean"]), array_from_json(d["scale"]))


# --------------------------------------------------------------------------- transformers

class GlobalFeatures(TransformerMixin, BaseEstimator):
    """Stack each graph's global feature row."""

    def fit(self, graphs, y=None):
        graphs = check_graphs(graphs)
        self.n_features_in_ = graphs[0].U.shape[1]
        self.feature_names_ = list(graphs[0].global_columns or [f"u{i}" for i in range(self.n_features_in_)])
        return self

    def transform(self, graphs):
        check_is_fitted(self)
        graphs = check_graphs(graphs)
        if graphs[0].U.shape[1] != self.n_features_in_:
            raise ShapeError(f"fitted on {self.n_features_in_} global features, got {graphs[0].U.shape[1]}")
        return np.concatenate([g.U for g in graphs], axis=0)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return np.array(self.feature_names_, dtype=object)


class GraphStatsFeaturizer(TransformerMixin, BaseEstimator):
    """Size and degree counts plus aggregates of named node columns."""

    def __init__(self, columns=None, fns=("sum", "mean", "max", "min")):
        self.columns = columns
        self.fns = fns

    def fit(self, graphs, y=None):
        graphs = check_graphs(graphs)
        self.feature_names_ = list(featurize.graph_statistics(graphs[0], self.columns, self.fns).names)
        return self

    def transform(self, graphs):
        check_is_fitted(self)
        rows = []
        for g in check_graphs(graphs):
            fv = featurize.graph_statistics(g, self.columns, self.fns)
            if list(fv.names) != self.feature_names_:
                raise ShapeError("graph node columns differ from those seen in fit")
            rows.append(fv.values)
        return np.concatenate(rows, axis=0)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return np.array(self.feature_names_, dtype=object)


class SubstructureFingerprint(TransformerMixin, BaseEstimator):
    """Folded substructure counts (or presence bits with ``binary=True``)."""

    def __init__(self, patterns=None, size=32, binary=False):
        self.patterns = patterns
        self.size = size
        self.binary = binary

    def fit(self, graphs, y=None):
        check_graphs(graphs)
        if self.size < 1:
            raise ValueError("size must be at least 1")
        self.patterns_ = list(self.patterns) if self.patterns is not None else featurize.default_patterns()
        return self

    def transform(self, graphs):
        check_is_fitted(self)
        return np.concatenate([featurize.fingerprint(g, self.patterns_, self.size, self.binary).values
                               for g in check_graphs(graphs)], axis=0)

    def get_feature_names_out(self, input_features=None):
        return np.array([f"fp{i}" for i in range(self.size)], dtype=object)


# --------------------------------------------------------------------------- feature regressors

class LinearRegressor(RegressorMixin, BaseEstimator):
    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.model_ = baselines.linreg_fit(X, y)
        self.coef_ = self.model_.weights.ravel().copy()
        self.intercept_ = self.model_.bias
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        return self.model_.predict(check_array(X)).ravel()

    def get_state(self) -> dict:
        check_is_fitted(self)
        return {"weights": array_to_json(self.model_.weights), "bias": self.model_.bias}

    def set_state(self, state):
        self.model_ = baselines.LinearModel(array_from_json(state["weights"]), float(state["bias"]))
        self.coef_ = self.model_.weights.ravel().copy()
        self.intercept_ = self.model_.bias
        self.n_features_in_ = self.model_.width
        return self


class GPRegressor(RegressorMixin, BaseEstimator):
    """RBF-kernel GP on standardized features; ``normalize_y`` centres and scales targets."""

    def __init__(self, lengthscale=1.0, signal_variance=1.0, noise_variance=1e-2, normalize_y=True):
        self.lengthscale = lengthscale
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance
        self.normalize_y = normalize_y

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.x_scaler_ = _Standardizer.fit(X)
        self.y_scaler_ = _Standardizer.fit(y.reshape(-1, 1), self.normalize_y)
        self.model_ = baselines.gp_fit(self.x_scaler_.forward(X), self.y_scaler_.forward(y.reshape(-1, 1)),
                                       self.lengthscale, self.signal_variance, self.noise_variance)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X, return_std=False):
        check_is_fitted(self)
        X = check_array(X)
        mean, var = baselines.gp_predict(self.model_, self.x_scaler_.forward(X))
        mean = self.y_scaler_.inverse(mean).ravel()
        if return_std:
            return mean, (np.sqrt(var) * self.y_scaler_.scale).ravel()
        return mean

    def get_state(self) -> dict:
        check_is_fitted(self)
        return {"X": array_to_json(self.model_.X), "y": array_to_json(self.model_.y),
                "x_scaler": self.x_scaler_.to_json(), "y_scaler": self.y_scaler_.to_json()}

    def set_state(self, state):
        self.x_scaler_ = _Standardizer.from_json(state["x_scaler"])
        self.y_scaler_ = _Standardizer.from_json(state["y_scaler"])
        self.model_ = baselines.gp_fit(array_from_json(state["X"]), array_from_json(state["y"]),
                                       self.lengthscale, self.signal_variance, self.noise_variance)
        self.n_features_in_ = self.model_.X.shape[1]
        return self


class MLPRegressor(RegressorMixin, BaseEstimator):
    """From-scratch MLP trained by gradient descent on standardized data."""

    def __init__(self, hidden=(32,), activation="relu", lr=0.05, epochs=500, batch_size=None, seed=0,
                 standardize=True):
        self.hidden = hidden
        self.activation = activation
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.standardize = standardize

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        y = y.reshape(-1, 1)
        self.x_scaler_ = _Standardizer.fit(X, self.standardize)
        self.y_scaler_ = _Standardizer.fit(y, self.standardize)
        p = init_mlp([X.shape[1], *self.hidden, 1], self.activation, np.random.default_rng(self.seed))
        self.params_, self.loss_history_ = train_mlp(
            self.x_scaler_.forward(X), self.y_scaler_.forward(y), p, epochs=self.epochs, lr=self.lr,
            seed=self.seed, batch_size=self.batch_size)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.params_.in_width:
            raise ShapeError(f"fitted on {self.params_.in_width} features, got {X.shape[1]}")
        return self.y_scaler_.inverse(mlp_forward(self.x_scaler_.forward(X), self.params_)).ravel()

    def get_state(self) -> dict:
        check_is_fitted(self)
        return {"params": mlp_to_dict(self.params_), "x_scaler": self.x_scaler_.to_json(),
                "y_scaler": self.y_scaler_.to_json()}

    def set_state(self, state):
        self.params_ = mlp_from_dict(state["params"])
        self.x_scaler_ = _Standardizer.from_json(state["x_scaler"])
        self.y_scaler_ = _Standardizer.from_json(state["y_scaler"])
        self.n_features_in_ = self.params_.in_width
        self.loss_history_ = []
        return self


# --------------------------------------------------------------------------- graph regressors

def _stack_targets(graphs, y, task) -> list[np.ndarray]:
    if task == "global":
        y = np.asarray(y, dtype=float)
        y = y.reshape(len(graphs), -1)
        return [y[i:i + 1] for i in range(len(graphs))]
    if len(y) != len(graphs):
        raise ShapeError(f"{len(y)} targets for {len(graphs)} graphs")
    out = []
    for g, t in zip(graphs, y):
        rows = g.num_nodes if task == "node" else g.num_edges
        out.append(np.asarray(t, dtype=float).reshape(rows, -1))
    return out


class _GraphRegressor(RegressorMixin, BaseEstimator):
    def _init_model(self, widths, out_width) -> gnn.GnnModel:  # pragma: no cover - abstract
        raise NotImplementedError

    def _scale_graph(self, g: GraphTensor) -> GraphTensor:
        return g.replace(X=self.node_scaler_.forward(g.X), E=self.edge_scaler_.forward(g.E),
                         U=self.global_scaler_.forward(g.U))

    def fit(self, graphs, y):
        graphs = check_graphs(graphs)
        targets = _stack_targets(graphs, y, self.task)
        on = self.standardize
        self.node_scaler_ = _Standardizer.fit(np.concatenate([g.X for g in graphs]), on)
        self.edge_scaler_ = _Standardizer.fit(np.concatenate([g.E for g in graphs]), on)
        self.global_scaler_ = _Standardizer.fit(np.concatenate([g.U for g in graphs]), on)
        self.y_scaler_ = _Standardizer.fit(np.concatenate(targets), on)
        widths = (graphs[0].X.shape[1], graphs[0].E.shape[1], graphs[0].U.shape[1])
        model = self._init_model(widths, targets[0].shape[1])
        data = gnn.Dataset(tuple((self._scale_graph(g), self.y_scaler_.forward(t))
                                 for g, t in zip(graphs, targets)), self.task)
        cfg = gnn.TrainConfig(self.epochs, self.lr, self.seed, self.batch_size, self.clip_norm)
        self.model_, self.loss_history_ = gnn.train(model, data, cfg)
        self.input_widths_ = widths
        return self

    def predict(self, graphs):
        """Global tasks give one value per graph (n,) or (n, t); node and edge tasks give a list of arrays."""
        check_is_fitted(self)
        graphs = check_graphs(graphs)
        widths = (graphs[0].X.shape[1], graphs[0].E.shape[1], graphs[0].U.shape[1])
        if widths != tuple(self.input_widths_):
            raise ShapeError(f"model expects (node, edge, global) widths {tuple(self.input_widths_)}, got {widths}")
        b = gnn.GraphBatch([self._scale_graph(g) for g in graphs])
        pred = self.y_scaler_.inverse(gnn.gnn_forward(self.model_, b)[0])
        if self.task == "global":
            return pred.ravel() if pred.shape[1] == 1 else pred
        return b.split_nodes(pred) if self.task == "node" else b.split_edges(pred)

    def get_state(self) -> dict:
        check_is_fitted(self)
        return {"model": model_to_dict(self.model_), "input_widths": list(self.input_widths_),
                **{k: getattr(self, k + "_").to_json()
                   for k in ("node_scaler", "edge_scaler", "global_scaler", "y_scaler")}}

    def set_state(self, state):
        self.model_ = model_from_dict(state["model"])
        self.input_widths_ = tuple(state["input_widths"])
        if tuple(self.model_.input_widths) != self.input_widths_:
            raise ShapeError("checkpoint widths disagree with its model")
        for k in ("node_scaler", "edge_scaler", "global_scaler", "y_scaler"):
            setattr(self, k + "_", _Standardizer.from_json(state[k]))
        self.loss_history_ = []
        return self


class GraphNetsRegressor(_GraphRegressor):
    """Stacked edge/node/global message passing with an MLP readout head."""

    def __init__(self, task="global", layer_widths=((16, 16, 16),), hidden=(32,), aggregator="sum",
                 activation="relu", head_hidden=(32,), lr=0.002, epochs=600, batch_size=None, seed=0,
                 standardize=True, clip_norm=10.0):
        self.task = task
        self.layer_widths = layer_widths
        self.hidden = hidden
        self.aggregator = aggregator
        self.activation = activation
        self.head_hidden = head_hidden
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.standardize = standardize
        self.clip_norm = clip_norm

    def _init_model(self, widths, out_width):
        return gnn.init_graphnets_model(*widths, layer_widths=[tuple(w) for w in self.layer_widths],
                                        hidden=self.hidden, activation=self.activation,
                                        aggregator=self.aggregator, head_hidden=self.head_hidden,
                                        out_width=out_width, task=self.task, seed=self.seed)


class GCNRegressor(_GraphRegressor):
    """Degree-normalized neighbourhood averaging; global tasks read out summed nodes plus globals."""

    def __init__(self, task="global", widths=(16, 16), activation="relu", head_hidden=(32,), lr=0.002,
                 epochs=300, batch_size=None, seed=0, standardize=True, clip_norm=10.0):
        self.task = task
        self.widths = widths
        self.activation = activation
        self.head_hidden = head_hidden
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.standardize = standardize
        self.clip_norm = clip_norm

    def _init_model(self, widths, out_width):
        return gnn.init_gcn_model(*widths, widths=tuple(self.widths), activation=self.activation,
                                  head_hidden=self.head_hidden, out_width=out_width, task=self.task,
                                  seed=self.seed)


REGRESSORS = {"linreg": LinearRegressor, "gp": GPRegressor, "mlp": MLPRegressor,
              "graphnets": GraphNetsRegressor, "gcn": GCNRegressor}
GRAPH_MODELS = ("graphnets", "gcn")


def feature_pipeline(kinds: Sequence[str] = ("global",)):
    """Union of graph transformers named by ``kinds`` (global, stats, fingerprint)."""
    from sklearn.pipeline import make_union

    table = {"global": GlobalFeatures, "stats": GraphStatsFeaturizer, "fingerprint": SubstructureFingerprint}
    unknown = [k for k in kinds if k not in table]
    if unknown or not kinds:
        raise ValueError(f"feature kinds must be drawn from {sorted(table)}, got {list(kinds)}")
    parts = [table[k]() for k in kinds]
    return parts[0] if len(parts) == 1 else make_union(*parts)
