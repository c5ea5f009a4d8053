"""Graph tensors and connectivity views.

Node indices are 0-based everywhere. Undirected edges are stored once as
``(min, max)``; the adjacency-matrix view symmetrizes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .exceptions import GraphValidationError, NonFiniteError, ShapeError
from .tensor import as_tensor, shape_str


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Connectivity:
    """Ordered edge list over ``num_nodes`` nodes."""

    edges: tuple[tuple[int, int], ...]
    num_nodes: int
    directed: bool = False
    allow_self_loops: bool = False

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        if not self.directed:
            edges = tuple((min(a, b), max(a, b)) for a, b in edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "num_nodes", int(self.num_nodes))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def senders(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @property
    def receivers(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    def violations(self) -> list[str]:
        out = []
        if self.num_nodes < 0:
            out.append(f"negative node count {self.num_nodes}")
        for k, (a, b) in enumerate(self.edges):
            if not (0 <= a < self.num_nodes and 0 <= b < self.num_nodes):
                out.append(f"edge {k} ({a},{b}) has an endpoint outside [0, {self.num_nodes})")
            elif a == b and not self.allow_self_loops:
                out.append(f"edge {k} is a self-loop on node {a}")
        return out


@dataclass(frozen=True)
class GraphTensor:
    """Node, edge and global feature tensors plus connectivity.

    Row ``i`` of ``E`` describes ``conn.edges[i]``. ``aux`` holds extra NxN
    matrices such as a distance matrix (``"AD"``). Column names and node
    labels are optional metadata used by featurizers and the CLI.
    """

    X: np.ndarray
    E: np.ndarray
    U: np.ndarray
    conn: Connectivity
    aux: Mapping[str, np.ndarray] = field(default_factory=dict)
    node_columns: tuple[str, ...] | None = None
    edge_columns: tuple[str, ...] | None = None
    global_columns: tuple[str, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        for name in ("X", "E", "U"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(1, -1)
            if arr.ndim != 2:
                raise ShapeError(f"{name} must be rank 2, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise NonFiniteError(f"{name} contains NaN or Inf")
            object.__setattr__(self, name, _frozen(arr))
        aux = {k: _frozen(as_tensor(v, name=k)) for k, v in dict(self.aux).items()}
        object.__setattr__(self, "aux", MappingProxyType(aux))
        for name in ("node_columns", "edge_columns", "global_columns", "labels"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(val))

    @property
    def num_nodes(self) -> int:
        return self.conn.num_nodes

    @property
    def num_edges(self) -> int:
        return self.conn.num_edges

    @property
    def directed(self) -> bool:
        return self.conn.directed

    @property
    def A(self) -> np.ndarray:
        return adjacency_matrix(self)

    def shapes(self) -> dict[str, str]:
        out = {"X": shape_str(self.X), "E": shape_str(self.E),
               "A": f"{self.num_nodes}x{self.num_nodes}", "U": shape_str(self.U)}
        for k, v in self.aux.items():
            out[k] = shape_str(v)
        return out

    def replace(self, **changes) -> "GraphTensor":
        return replace(self, **changes)

    def equals(self, other: "GraphTensor") -> bool:
        """Structural equality: same connectivity and identical tensors."""
        if self.conn != other.conn or set(self.aux) != set(other.aux):
            return False
        pairs = [(self.X, other.X), (self.E, other.E), (self.U, other.U)]
        pairs += [(self.aux[k], other.aux[k]) for k in self.aux]
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)


def validate(g: GraphTensor) -> list[str]:
    """Return every invariant violation of ``g``; an empty list means valid."""
    out = list(g.conn.violations())
    n, m = g.num_nodes, g.num_edges
    if g.X.shape[0] != n:
        out.append(f"node tensor rows ({g.X.shape[0]}) != node count ({n})")
    if g.E.shape[0] != m:
        out.append(f"edge tensor rows ({g.E.shape[0]}) != edge count ({m})")
    if g.U.shape[0] != 1:
        out.append(f"global tensor must have one row, has {g.U.shape[0]}")
    for name, mat in g.aux.items():
        if mat.shape != (n, n):
            out.append(f"aux matrix {name!r} is {shape_str(mat)}, expected {n}x{n}")
        elif not g.directed and not np.allclose(mat, mat.T, atol=1e-12):
            out.append(f"aux matrix {name!r} is asymmetric in an undirected graph")
    for attr, width in (("node_columns", g.X.shape[1]), ("edge_columns", g.E.shape[1]),
                        ("global_columns", g.U.shape[1])):
        names = getattr(g, attr)
        if names is not None and len(names) != width:
            out.append(f"{attr} lists {len(names)} names for {width} columns")
    if g.labels is not None and len(g.labels) != n:
        out.append(f"{len(g.labels)} labels for {n} nodes")
    return out


def check_graph(g: GraphTensor) -> GraphTensor:
    problems = validate(g)
    if problems:
        raise GraphValidationError(problems)
    return g


def adjacency_matrix(g: GraphTensor | Connectivity) -> np.ndarray:
    """Dense 0/1 presence matrix; symmetric for undirected graphs."""
    conn = g.conn if isinstance(g, GraphTensor) else g
    problems = conn.violations()
    if problems:
        raise GraphValidationError(problems)
    n = conn.num_nodes
    A = np.zeros((n, n))
    if conn.num_edges:
        s, r = conn.senders, conn.receivers
        A[s, r] = 1.0
        if not conn.directed:
            A[r, s] = 1.0
    return A


def adjacency_list(m, directed: bool = False, allow_self_loops: bool = False) -> Connectivity:
    """Edge list from a 0/1 matrix, in lexicographic order.

    Undirected matrices are read from the upper triangle, so each edge
    appears once as ``(i, j)`` with ``i < j``.
    """
    m = as_tensor(m, name="adjacency")
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"adjacency matrix must be square, got {shape_str(m)}")
    if not np.all((m == 0) | (m == 1)):
        raise GraphValidationError(["adjacency entries must be 0 or 1"])
    if not directed and not np.array_equal(m, m.T):
        raise GraphValidationError(["asymmetric adjacency matrix given with directed=False"])
    n = m.shape[0]
    if not allow_self_loops and np.any(np.diag(m)):
        raise GraphValidationError(["adjacency matrix has self-loops"])
    mask = m.astype(bool)
    if not directed:
        mask = np.triu(mask)
    rows, cols = np.nonzero(mask)
    return Connectivity(tuple(zip(rows.tolist(), cols.tolist())), n, directed, allow_self_loops)


def pairwise_distances(positions) -> np.ndarray:
    pos = as_tensor(positions, name="positions")
    if pos.shape[1] != 3:
        raise ShapeError(f"positions must be Nx3, got {shape_str(pos)}")
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def contact_adjacency(positions, cutoff: float) -> np.ndarray:
    """Residue contact map: 1 where two distinct points lie within ``cutoff`` (Angstrom)."""
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    d = pairwise_distances(positions)
    A = (d <= cutoff).astype(float)
    np.fill_diagonal(A, 0.0)
    return A


def _check_permutation(p, n: int) -> np.ndarray:
    p = np.asarray(p)
    if p.shape != (n,) or not np.issubdtype(p.dtype, np.integer):
        raise GraphValidationError([f"permutation must be {n} integers, got shape {p.shape}"])
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise GraphValidationError(["permutation is not a bijection on node indices"])
    return p


def permute_nodes(g: GraphTensor, p: Sequence[int]) -> GraphTensor:
    """Relabel nodes so that new node ``i`` is old node ``p[i]``.

    The adjacency matrix of the result is ``P A P^T``. Edge rows keep their
    order and content; only their endpoints are renamed.
    """
    p = _check_permutation(p, g.num_nodes)
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p))
    edges = tuple((int(inv[a]), int(inv[b])) for a, b in g.conn.edges)
    conn = Connectivity(edges, g.num_nodes, g.directed, g.conn.allow_self_loops)
    aux = {k: v[np.ix_(p, p)] for k, v in g.aux.items()}
    labels = tuple(g.labels[i] for i in p) if g.labels is not None else None
    return g.replace(X=g.X[p], conn=conn, aux=aux, labels=labels)


def degrees(g: GraphTensor | Connectivity) -> np.ndarray:
    """Number of incident edge endpoints per node (in + out for directed graphs)."""
    conn = g.conn if isinstance(g, GraphTensor) else g
    deg = np.zeros(conn.num_nodes, dtype=np.int64)
    for a, b in conn.edges:
        deg[a] += 1
        deg[b] += 1
    return deg
