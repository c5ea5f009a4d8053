"""GraphNets-style message passing, a GCN layer, task readouts and training.

A layer runs three blocks in order:

* edge block: each edge sees ``[e, x_src, x_dst, u]`` and is updated by the
  edge MLP;
* node block: each node aggregates its updated incident edges and sees
  ``[agg(e'), x, u]``;
* global block: the graph sees ``[agg(x'), agg(e'), u]``.

Undirected edges are updated symmetrically: the edge MLP is applied to both
endpoint orders and the two outputs are averaged, so relabelling nodes (which
may flip the stored ``(min, max)`` order) cannot change the result. Each
undirected edge is incident to both endpoints; a directed edge is incident
to its receiver only. Aggregating over nothing yields zeros.

Several graphs are processed together as one disjoint union (see
:class:`GraphBatch`), which is also how training works.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ShapeError, TrainingError
from .graph import GraphTensor
from .nn import (ACTIVATIONS, MlpParams, _activate, _activate_grad, dense, init_mlp, mlp_backward,
                 mlp_forward_cache, mse_grad, mse_loss)
from .tensor import as_tensor, shape_str

TASKS = ("global", "node", "edge")
GNN_AGGREGATORS = ("sum", "mean", "max")


# --------------------------------------------------------------------------- parameters

@dataclass(frozen=True)
class GraphNetsLayerParams:
    edge_mlp: MlpParams
    node_mlp: MlpParams
    global_mlp: MlpParams
    aggregator: str = "sum"

    def __post_init__(self):
        if self.aggregator not in GNN_AGGREGATORS:
            raise ValueError(f"aggregator must be one of {GNN_AGGREGATORS}, got {self.aggregator!r}")

    def output_widths(self, fn: int, fe: int, fu: int) -> tuple[int, int, int]:
        """Check the width chain for inputs (fn, fe, fu) and return (fn', fe', fu')."""
        fe2, fn2, fu2 = self.edge_mlp.out_width, self.node_mlp.out_width, self.global_mlp.out_width
        for name, got, want in (("edge", self.edge_mlp.in_width, fe + 2 * fn + fu),
                                ("node", self.node_mlp.in_width, fe2 + fn + fu),
                                ("global", self.global_mlp.in_width, fn2 + fe2 + fu)):
            if got != want:
                raise ShapeError(f"{name} MLP takes {got} inputs but the graph supplies {want} "
                                 f"(node {fn}, edge {fe}, global {fu})")
        return fn2, fe2, fu2

    def mlps(self) -> tuple[MlpParams, MlpParams, MlpParams]:
        return self.edge_mlp, self.node_mlp, self.global_mlp


@dataclass(frozen=True)
class GcnLayerParams:
    """Node-only layer: ``x_i' = act(mean_{j in {i} + N(i)} x_j @ W)``."""

    W: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        W = as_tensor(self.W, name="W")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "W", W)

    def output_widths(self, fn: int, fe: int, fu: int) -> tuple[int, int, int]:
        if self.W.shape[0] != fn:
            raise ShapeError(f"GCN weight {shape_str(self.W)} does not accept {fn} node features")
        return self.W.shape[1], fe, fu


@dataclass(frozen=True)
class GnnModel:
    """Stack of message-passing layers followed by a task readout head.

    For ``global`` tasks the head reads the final global features; when
    ``pool_nodes`` is set (GCN stacks, which never touch globals) it reads
    ``[sum of node features, u]`` instead.
    """

    layers: tuple
    head: MlpParams
    task: str = "global"
    input_widths: tuple[int, int, int] = (0, 0, 0)
    pool_nodes: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_widths", tuple(int(w) for w in self.input_widths))
        fn, fe, fu = self.final_widths()
        want = {"global": fn + fu if self.pool_nodes else fu, "node": fn, "edge": fe}[self.task]
        if self.head.in_width != want:
            raise ShapeError(f"readout head takes {self.head.in_width} inputs, "
                             f"final {self.task} features have width {want}")

    def final_widths(self) -> tuple[int, int, int]:
        widths = self.input_widths
        for layer in self.layers:
            widths = layer.output_widths(*widths)
        return widths

    @property
    def out_width(self) -> int:
        return self.head.out_width

    def arrays(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            if isinstance(layer, GcnLayerParams):
                out.append(layer.W)
            else:
                for mlp in layer.mlps():
                    out.extend(mlp.arrays())
        return out + self.head.arrays()

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "GnnModel":
        arrays = list(arrays)
        pos = 0

        def take(mlp):
            nonlocal pos
            k = len(mlp.arrays())
            new = mlp.with_arrays(arrays[pos:pos + k])
            pos += k
            return new

        layers = []
        for layer in self.layers:
            if isinstance(layer, GcnLayerParams):
                layers.append(GcnLayerParams(arrays[pos], layer.activation))
                pos += 1
            else:
                layers.append(GraphNetsLayerParams(take(layer.edge_mlp), take(layer.node_mlp),
                                                   take(layer.global_mlp), layer.aggregator))
        head = take(self.head)
        return GnnModel(tuple(layers), head, self.task, self.input_widths, self.pool_nodes)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_vector(self, vec) -> "GnnModel":
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.asarray(vec[pos:pos + a.size], dtype=float).reshape(a.shape))
            pos += a.size
        return self.with_arrays(out)


def _zero_output_layer(head: MlpParams) -> MlpParams:
    # untrained models then predict the (standardized) target mean
    arrays = head.arrays()
    arrays[-2] = np.zeros_like(arrays[-2])
    return head.with_arrays(arrays)


def init_graphnets_layer(fn, fe, fu, *, out=(16, 16, 16), hidden=(32,), activation="relu",
                         aggregator="sum", rng=None) -> GraphNetsLayerParams:
    """Random layer mapping widths (fn, fe, fu) to ``out`` = (fn', fe', fu')."""
    rng = np.random.default_rng(rng)
    fn2, fe2, fu2 = out
    hidden = list(hidden)
    return GraphNetsLayerParams(
        init_mlp([fe + 2 * fn + fu, *hidden, fe2], activation, rng),
        init_mlp([fe2 + fn + fu, *hidden, fn2], activation, rng),
        init_mlp([fn2 + fe2 + fu, *hidden, fu2], activation, rng),
        aggregator,
    )


def init_graphnets_model(node_width, edge_width, global_width, *, layer_widths=((16, 16, 16),),
                         hidden=(32,), activation="relu", aggregator="sum", head_hidden=(32,),
                         out_width=1, task="global", seed=0) -> GnnModel:
    rng = np.random.default_rng(seed)
    widths = (node_width, edge_width, global_width)
    layers = []
    for out in layer_widths:
        layers.append(init_graphnets_layer(*widths, out=out, hidden=hidden, activation=activation,
                                           aggregator=aggregator, rng=rng))
        widths = tuple(out)
    fn, fe, fu = widths
    head_in = {"global": fu, "node": fn, "edge": fe}[task]
    head = _zero_output_layer(init_mlp([head_in, *head_hidden, out_width], activation, rng))
    return GnnModel(tuple(layers), head, task, (node_width, edge_width, global_width))


def init_gcn_model(node_width, edge_width, global_width, *, widths=(16, 16), activation="relu",
                   head_hidden=(32,), out_width=1, task="global", seed=0) -> GnnModel:
    if task == "edge":
        raise ValueError("GCN layers leave edges untouched; use a GraphNets model for edge tasks")
    rng = np.random.default_rng(seed)
    layers, fn = [], node_width
    for w in widths:
        s = np.sqrt(6.0 / (fn + w))
        layers.append(GcnLayerParams(rng.uniform(-s, s, size=(fn, w)), activation))
        fn = w
    head_in = fn + global_width if task == "global" else fn
    head = _zero_output_layer(init_mlp([head_in, *head_hidden, out_width], activation, rng))
    return GnnModel(tuple(layers), head, task, (node_width, edge_width, global_width),
                    pool_nodes=(task == "global"))


# --------------------------------------------------------------------------- batching

class GraphBatch:
    """Disjoint union of graphs with index arrays for message passing."""

    def __init__(self, graphs: Sequence[GraphTensor]):
        graphs = list(graphs)
        if not graphs:
            raise ValueError("cannot batch zero graphs")
        widths = {(g.X.shape[1], g.E.shape[1], g.U.shape[1]) for g in graphs}
        if len(widths) > 1:
            raise ShapeError(f"graphs in a batch have different feature widths: {sorted(widths)}")
        self.graphs = graphs
        self.num_graphs = len(graphs)
        self.node_counts = np.array([g.num_nodes for g in graphs], dtype=np.int64)
        self.edge_counts = np.array([g.num_edges for g in graphs], dtype=np.int64)
        node_off = np.concatenate([[0], np.cumsum(self.node_counts)[:-1]])
        self.X = np.concatenate([g.X for g in graphs], axis=0)
        self.E = np.concatenate([g.E for g in graphs], axis=0)
        self.U = np.concatenate([g.U for g in graphs], axis=0)
        self.n, self.m = self.X.shape[0], self.E.shape[0]
        self.senders = np.concatenate([g.conn.senders + o for g, o in zip(graphs, node_off)]).astype(np.int64)
        self.receivers = np.concatenate([g.conn.receivers + o for g, o in zip(graphs, node_off)]).astype(np.int64)
        self.sym = np.concatenate([np.full(g.num_edges, not g.directed) for g in graphs]).astype(bool)
        self.sym_idx = np.nonzero(self.sym)[0]
        self.node_graph = np.repeat(np.arange(self.num_graphs), self.node_counts)
        self.edge_graph = np.repeat(np.arange(self.num_graphs), self.edge_counts)
        # (edge, node) incidences and (neighbour -> node) pairs, ordered by edge index
        pair_edge = np.concatenate([np.arange(self.m), self.sym_idx])
        pair_node = np.concatenate([self.receivers, self.senders[self.sym_idx]])
        pair_src = np.concatenate([self.senders, self.receivers[self.sym_idx]])
        order = np.argsort(pair_edge, kind="stable")
        self.pair_edge, self.pair_node, self.pair_src = pair_edge[order], pair_node[order], pair_src[order]
        self.node_offsets = node_off

    def split_nodes(self, rows: np.ndarray) -> list[np.ndarray]:
        return np.split(rows, np.cumsum(self.node_counts)[:-1])

    def split_edges(self, rows: np.ndarray) -> list[np.ndarray]:
        return np.split(rows, np.cumsum(self.edge_counts)[:-1])


def _segment_aggregate(values: np.ndarray, seg: np.ndarray, n_seg: int, fn: str):
    """Reduce rows of ``values`` into ``n_seg`` buckets; empty buckets give zeros.

    Sums accumulate each column in ascending value order within a bucket, so
    the result does not depend on the order of the rows.
    """
    f = values.shape[1]
    counts = np.bincount(seg, minlength=n_seg).astype(float)
    out = np.zeros((n_seg, f))
    if values.shape[0] == 0 or f == 0:
        return out, counts
    if fn == "max":
        out[:] = -np.inf
        np.maximum.at(out, seg, values)
        out[counts == 0] = 0.0
        return out, counts
    for c in range(f):
        order = np.lexsort((values[:, c], seg))
        np.add.at(out[:, c], seg[order], values[order, c])
    if fn == "mean":
        out /= np.maximum(counts, 1.0)[:, None]
    return out, counts


def _segment_aggregate_backward(dout, values, seg, out, counts, fn):
    if fn == "sum":
        return dout[seg]
    if fn == "mean":
        return dout[seg] / np.maximum(counts, 1.0)[seg][:, None]
    grad = np.zeros_like(values)
    hit = values == out[seg]
    for c in range(values.shape[1]):
        rows = np.nonzero(hit[:, c])[0]
        _, first = np.unique(seg[rows], return_index=True)
        chosen = rows[first]
        grad[chosen, c] = dout[seg[chosen], c]
    return grad


# --------------------------------------------------------------------------- blocks

def _edge_forward(mlp: MlpParams, b: GraphBatch, X, E, U):
    sym = b.sym_idx
    uE = U[b.edge_graph]
    fwd = np.concatenate([E, X[b.senders], X[b.receivers], uE], axis=1)
    rev = np.concatenate([E[sym], X[b.receivers[sym]], X[b.senders[sym]], uE[sym]], axis=1)
    out, cache = mlp_forward_cache(np.concatenate([fwd, rev], axis=0), mlp)
    E2 = out[:b.m].copy()
    E2[sym] = 0.5 * (out[:b.m][sym] + out[b.m:])
    return E2, cache


def _edge_backward(mlp, b: GraphBatch, cache, dE2, fn, fe, fu):
    sym, m = b.sym_idx, b.m
    dout = np.concatenate([dE2, 0.5 * dE2[sym]], axis=0)
    dout[sym] *= 0.5
    grads, dinp = mlp_backward(dout, mlp, cache)
    dX = np.zeros((b.n, fn))
    dE = dinp[:m, :fe].copy()
    dU = np.zeros((b.num_graphs, fu))
    fwd, rev = dinp[:m], dinp[m:]
    np.add.at(dX, b.senders, fwd[:, fe:fe + fn])
    np.add.at(dX, b.receivers, fwd[:, fe + fn:fe + 2 * fn])
    np.add.at(dU, b.edge_graph, fwd[:, fe + 2 * fn:])
    if len(sym):
        np.add.at(dE, sym, rev[:, :fe])
        np.add.at(dX, b.receivers[sym], rev[:, fe:fe + fn])
        np.add.at(dX, b.senders[sym], rev[:, fe + fn:fe + 2 * fn])
        np.add.at(dU, b.edge_graph[sym], rev[:, fe + 2 * fn:])
    return grads, dX, dE, dU


def _node_forward(mlp, agg, b: GraphBatch, X, E2, U):
    vals = E2[b.pair_edge]
    aggE, counts = _segment_aggregate(vals, b.pair_node, b.n, agg)
    out, cache = mlp_forward_cache(np.concatenate([aggE, X, U[b.node_graph]], axis=1), mlp)
    return out, (cache, vals, aggE, counts)


def _node_backward(mlp, agg, b: GraphBatch, cache, dX2, fn, fe2, fu):
    mcache, vals, aggE, counts = cache
    grads, dinp = mlp_backward(dX2, mlp, mcache)
    dE2 = np.zeros((b.m, fe2))
    dvals = _segment_aggregate_backward(dinp[:, :fe2], vals, b.pair_node, aggE, counts, agg)
    np.add.at(dE2, b.pair_edge, dvals)
    dX = dinp[:, fe2:fe2 + fn].copy()
    dU = np.zeros((b.num_graphs, fu))
    np.add.at(dU, b.node_graph, dinp[:, fe2 + fn:])
    return grads, dX, dE2, dU


def _global_forward(mlp, agg, b: GraphBatch, X2, E2, U):
    aggX, cx = _segment_aggregate(X2, b.node_graph, b.num_graphs, agg)
    aggE, ce = _segment_aggregate(E2, b.edge_graph, b.num_graphs, agg)
    out, cache = mlp_forward_cache(np.concatenate([aggX, aggE, U], axis=1), mlp)
    return out, (cache, aggX, cx, aggE, ce)


def _global_backward(mlp, agg, b: GraphBatch, cache, dU2, X2, E2):
    mcache, aggX, cx, aggE, ce = cache
    grads, dinp = mlp_backward(dU2, mlp, mcache)
    fn2, fe2 = X2.shape[1], E2.shape[1]
    dX2 = _segment_aggregate_backward(dinp[:, :fn2], X2, b.node_graph, aggX, cx, agg)
    dE2 = _segment_aggregate_backward(dinp[:, fn2:fn2 + fe2], E2, b.edge_graph, aggE, ce, agg)
    return grads, dX2, dE2, dinp[:, fn2 + fe2:].copy()


def _graphnets_forward(p: GraphNetsLayerParams, b: GraphBatch, X, E, U):
    E2, ce = _edge_forward(p.edge_mlp, b, X, E, U)
    X2, cn = _node_forward(p.node_mlp, p.aggregator, b, X, E2, U)
    U2, cg = _global_forward(p.global_mlp, p.aggregator, b, X2, E2, U)
    return (X2, E2, U2), (ce, cn, cg, X, E, U, X2, E2)


def _graphnets_backward(p: GraphNetsLayerParams, b: GraphBatch, cache, dX2, dE2, dU2):
    ce, cn, cg, X, E, U, X2, E2 = cache
    fn, fe, fu = X.shape[1], E.shape[1], U.shape[1]
    gG, dX2g, dE2g, dU = _global_backward(p.global_mlp, p.aggregator, b, cg, dU2, X2, E2)
    dX2 = dX2 + dX2g
    dE2 = dE2 + dE2g
    gN, dX, dE2n, dUn = _node_backward(p.node_mlp, p.aggregator, b, cn, dX2, fn, E2.shape[1], fu)
    dE2 = dE2 + dE2n
    gE, dXe, dE, dUe = _edge_backward(p.edge_mlp, b, ce, dE2, fn, fe, fu)
    grads = GraphNetsLayerParams(gE, gN, gG, p.aggregator)
    return grads, dX + dXe, dE, dU + dUn + dUe


def _gcn_forward(p: GcnLayerParams, b: GraphBatch, X, E, U):
    vals = np.concatenate([X, X[b.pair_src]], axis=0)
    seg = np.concatenate([np.arange(b.n), b.pair_node])
    agg, counts = _segment_aggregate(vals, seg, b.n, "mean")
    Z = dense(agg, p.W)
    A = _activate(Z, p.activation)
    return (A, E, U), (agg, counts, Z, A)


def _gcn_backward(p: GcnLayerParams, b: GraphBatch, cache, dX2, dE2, dU2):
    agg, counts, Z, A = cache
    dZ = dX2 * _activate_grad(Z, A, p.activation)
    dW = agg.T @ dZ
    dagg = (dZ @ p.W.T) / counts[:, None]
    dX = dagg.copy()
    np.add.at(dX, b.pair_src, dagg[b.pair_node])
    return GcnLayerParams(dW, p.activation), dX, dE2, dU2


# --------------------------------------------------------------------------- single-graph API

def _single(g: GraphTensor) -> GraphBatch:
    return GraphBatch([g])


def edge_block(g: GraphTensor, p: GraphNetsLayerParams) -> np.ndarray:
    """Updated edge features E' (M x Fe')."""
    p.output_widths(g.X.shape[1], g.E.shape[1], g.U.shape[1])
    return _edge_forward(p.edge_mlp, _single(g), g.X, g.E, g.U)[0]


def node_block(g: GraphTensor, E2, p: GraphNetsLayerParams) -> np.ndarray:
    """Updated node features X' (N x Fn') from edge-block output ``E2``."""
    p.output_widths(g.X.shape[1], g.E.shape[1], g.U.shape[1])
    E2 = np.asarray(E2, dtype=float).reshape(g.num_edges, -1)
    return _node_forward(p.node_mlp, p.aggregator, _single(g), g.X, E2, g.U)[0]


def global_block(g: GraphTensor, X2, E2, p: GraphNetsLayerParams) -> np.ndarray:
    """Updated global features U' (1 x Fu')."""
    p.output_widths(g.X.shape[1], g.E.shape[1], g.U.shape[1])
    X2 = np.asarray(X2, dtype=float).reshape(g.num_nodes, -1)
    E2 = np.asarray(E2, dtype=float).reshape(g.num_edges, -1)
    return _global_forward(p.global_mlp, p.aggregator, _single(g), X2, E2, g.U)[0]


def graphnets_layer(g: GraphTensor, p: GraphNetsLayerParams) -> GraphTensor:
    p.output_widths(g.X.shape[1], g.E.shape[1], g.U.shape[1])
    (X2, E2, U2), _ = _graphnets_forward(p, _single(g), g.X, g.E, g.U)
    return g.replace(X=X2, E=E2, U=U2, node_columns=None, edge_columns=None, global_columns=None)


def gcn_layer(g: GraphTensor, W, activation: str = "identity") -> GraphTensor:
    """Mean over each node and its neighbours, then ``act(. @ W)``; E and U untouched."""
    p = GcnLayerParams(W, activation)
    p.output_widths(g.X.shape[1], g.E.shape[1], g.U.shape[1])
    (X2, _, _), _ = _gcn_forward(p, _single(g), g.X, g.E, g.U)
    return g.replace(X=X2, node_columns=None)


# --------------------------------------------------------------------------- model

def _layer_forward(layer, b, X, E, U):
    if isinstance(layer, GcnLayerParams):
        return _gcn_forward(layer, b, X, E, U)
    return _graphnets_forward(layer, b, X, E, U)


def _layer_backward(layer, b, cache, dX, dE, dU):
    if isinstance(layer, GcnLayerParams):
        return _gcn_backward(layer, b, cache, dX, dE, dU)
    return _graphnets_backward(layer, b, cache, dX, dE, dU)


def _readout_input(model: GnnModel, b: GraphBatch, X, E, U):
    if model.task == "node":
        return X, None
    if model.task == "edge":
        return E, None
    if model.pool_nodes:
        pooled, counts = _segment_aggregate(X, b.node_graph, b.num_graphs, "sum")
        return np.concatenate([pooled, U], axis=1), counts
    return U, None


def gnn_forward(model: GnnModel, b: GraphBatch):
    """Predictions for a whole batch (B x t, sum(N) x t or sum(M) x t) and a backward cache."""
    widths = (b.X.shape[1], b.E.shape[1], b.U.shape[1])
    if widths != model.input_widths:
        raise ShapeError(f"model expects (node, edge, global) widths {model.input_widths}, got {widths}")
    X, E, U = b.X, b.E, b.U
    caches = []
    for layer in model.layers:
        (X, E, U), c = _layer_forward(layer, b, X, E, U)
        caches.append(c)
    inp, counts = _readout_input(model, b, X, E, U)
    pred, hcache = mlp_forward_cache(inp, model.head)
    return pred, (caches, hcache, X, E, U, counts)


def gnn_backward(model: GnnModel, b: GraphBatch, cache, dpred) -> GnnModel:
    """Parameter gradients for upstream gradient ``dpred``, shaped like ``model``."""
    caches, hcache, X, E, U, counts = cache
    ghead, dinp = mlp_backward(dpred, model.head, hcache)
    dX, dE, dU = np.zeros_like(X), np.zeros_like(E), np.zeros_like(U)
    if model.task == "node":
        dX = dinp
    elif model.task == "edge":
        dE = dinp
    elif model.pool_nodes:
        fn = X.shape[1]
        dX = dinp[:, :fn][b.node_graph]
        dU = dinp[:, fn:]
    else:
        dU = dinp
    layer_grads = []
    for layer, c in zip(reversed(model.layers), reversed(caches)):
        g, dX, dE, dU = _layer_backward(layer, b, c, dX, dE, dU)
        layer_grads.append(g)
    grads = [a for lg in reversed(layer_grads)
             for a in ([lg.W] if isinstance(lg, GcnLayerParams) else
                       [x for mlp in lg.mlps() for x in mlp.arrays()])]
    return model.with_arrays(grads + ghead.arrays())


def readout(g, model: GnnModel) -> np.ndarray:
    """Apply the model's head to an already message-passed graph ``g``.

    ``global`` gives 1 x t, ``node`` N x t and ``edge`` M x t.
    """
    b = _single(g)
    inp, _ = _readout_input(model, b, g.X, g.E, g.U)
    if inp.shape[1] != model.head.in_width:
        raise ShapeError(f"{model.task} readout expects width {model.head.in_width}, got {inp.shape[1]}")
    return mlp_forward_cache(inp, model.head)[0]


def predict(model: GnnModel, graphs) -> np.ndarray:
    if isinstance(graphs, GraphTensor):
        graphs = [graphs]
    return gnn_forward(model, GraphBatch(graphs))[0]


# --------------------------------------------------------------------------- training

@dataclass(frozen=True)
class Dataset:
    """(graph, target) pairs with a task level; targets are 1 x t, N x t or M x t."""

    items: tuple
    task: str = "global"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        items = []
        for k, (g, y) in enumerate(self.items):
            y = np.asarray(y, dtype=float)
            rows = {"global": 1, "node": g.num_nodes, "edge": g.num_edges}[self.task]
            if y.ndim < 2:
                y = y.reshape(rows, -1)
            if y.shape[0] != rows:
                raise ShapeError(f"item {k}: {self.task} target has {y.shape[0]} rows, expected {rows}")
            items.append((g, as_tensor(y, name=f"target {k}")))
        widths = {y.shape[1] for _, y in items}
        if len(widths) > 1:
            raise ShapeError(f"targets have different widths: {sorted(widths)}")
        object.__setattr__(self, "items", tuple(items))

    def __len__(self) -> int:
        return len(self.items)

    @property
    def graphs(self) -> list[GraphTensor]:
        return [g for g, _ in self.items]

    def stacked_targets(self, idx=None) -> np.ndarray:
        items = self.items if idx is None else [self.items[i] for i in idx]
        return np.concatenate([y for _, y in items], axis=0)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    lr: float = 0.01
    seed: int = 0
    batch_size: int | None = None
    clip_norm: float | None = None

    def __post_init__(self):
        if self.epochs < 0 or self.lr < 0:
            raise ValueError("epochs and lr must be non-negative")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def loss_and_gradients(model: GnnModel, batch: GraphBatch, targets: np.ndarray):
    pred, cache = gnn_forward(model, batch)
    if not np.all(np.isfinite(pred)):
        raise TrainingError("predictions overflowed; lower the learning rate or set clip_norm")
    if pred.shape != targets.shape:
        raise ShapeError(f"predictions {shape_str(pred)} and targets {shape_str(targets)} differ")
    loss = mse_loss(pred, targets)
    return loss, gnn_backward(model, batch, cache, mse_grad(pred, targets))


def sgd_update(model: GnnModel, grads: GnnModel, lr: float, clip_norm: float | None = None) -> GnnModel:
    """``model - lr * grads``; with ``clip_norm`` the gradient is first rescaled to at most that global norm."""
    garrs = grads.arrays()
    if clip_norm is not None:
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in garrs)))
        if norm > clip_norm:
            garrs = [g * (clip_norm / norm) for g in garrs]
    return model.with_arrays([a - lr * g for a, g in zip(model.arrays(), garrs)])


def train(model: GnnModel, dataset: Dataset, config: TrainConfig = TrainConfig()):
    """Gradient descent on MSE, optionally with global-norm gradient clipping.

    Returns the trained model and one loss per epoch, each measured on the
    full dataset before that epoch's updates. Identical inputs and seed give
    a bit-identical history.
    """
    if len(dataset) == 0:
        raise TrainingError("cannot train on an empty dataset")
    if dataset.task != model.task:
        raise TrainingError(f"dataset task {dataset.task!r} does not match model task {model.task!r}")
    full = GraphBatch(dataset.graphs)
    targets = dataset.stacked_targets()
    rng = np.random.default_rng(config.seed)
    n = len(dataset)
    history = []
    for epoch in range(config.epochs):
        loss, grads = loss_and_gradients(model, full, targets)
        if not np.isfinite(loss):
            raise TrainingError(f"loss is {loss} at epoch {epoch}; lower the learning rate")
        history.append(loss)
        if config.batch_size is None or config.batch_size >= n:
            model = sgd_update(model, grads, config.lr, config.clip_norm)
            continue
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = GraphBatch([dataset.items[i][0] for i in idx])
            _, g = loss_and_gradients(model, batch, dataset.stacked_targets(idx))
            model = sgd_update(model, g, config.lr, config.clip_norm)
    return model, history
