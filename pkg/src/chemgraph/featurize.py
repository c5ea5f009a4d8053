"""Fixed-size graph descriptors for feature-based learners.

Three families:

* whole-graph statistics: a node column reduced with a permutation-invariant
  aggregator, plus simple size and degree counts;
* substructure counts: induced, label-exact matches of a small pattern
  graph, each occurrence (distinct node set) counted once;
* folded fingerprints: pattern counts hashed into ``size`` buckets with
  64-bit FNV-1a over the pattern's canonical string, so bucket positions
  are stable across runs and platforms.

Substructure matching ignores edge direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from .graph import GraphTensor, degrees
from .tensor import AGGREGATORS, aggregate, as_tensor

PATTERN_KINDS = ("path", "cycle", "motif")
MAX_PATTERN_NODES = 8

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class FeatureVector:
    """A 1 x d row of descriptor values with one unique name per column."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        values = as_tensor(self.values, name="feature values")
        names = tuple(self.names)
        if values.shape[0] != 1:
            raise ValueError(f"feature vector must have one row, got {values.shape[0]}")
        if len(names) != values.shape[1]:
            raise ValueError(f"{len(names)} names for {values.shape[1]} values")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.names)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values[0].tolist()))


@dataclass(frozen=True)
class SubgraphPattern:
    """Small connected query graph.

    ``labels[i]`` is the required label of pattern node ``i``; ``None``
    matches any label.
    """

    labels: tuple
    edges: tuple[tuple[int, int], ...]
    kind: str = "motif"
    name: str | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        n = len(labels)
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"pattern kind must be one of {PATTERN_KINDS}, got {self.kind!r}")
        if n < 1:
            raise ValueError("a pattern needs at least one node")
        edges = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ValueError(f"pattern edge ({a},{b}) is invalid for {n} nodes")
            edges.add((min(a, b), max(a, b)))
        if not _connected(n, edges):
            raise ValueError("pattern must be connected")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", tuple(sorted(edges)))

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @classmethod
    def path(cls, labels, name=None) -> "SubgraphPattern":
        """Chain ``labels[0] - labels[1] - ...``; an int gives an unlabelled path of that many nodes."""
        if isinstance(labels, int):
            labels = [None] * labels
        labels = tuple(labels)
        return cls(labels, tuple((i, i + 1) for i in range(len(labels) - 1)), "path", name)

    @classmethod
    def cycle(cls, labels, name=None) -> "SubgraphPattern":
        """Ring through ``labels`` in order; an int gives an unlabelled ring."""
        if isinstance(labels, int):
            labels = [None] * labels
        labels = tuple(labels)
        if len(labels) < 3:
            raise ValueError("a cycle needs at least 3 nodes")
        k = len(labels)
        return cls(labels, tuple((i, (i + 1) % k) for i in range(k)), "cycle", name)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "labels": list(self.labels), "edges": [list(e) for e in self.edges],
                "name": self.name}

    @classmethod
    def from_dict(cls, d) -> "SubgraphPattern":
        return cls(tuple(d["labels"]), tuple(tuple(e) for e in d["edges"]), d.get("kind", "motif"),
                   d.get("name"))


def _connected(n: int, edges) -> bool:
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, stack = {0}, [0]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def _neighbour_sets(g: GraphTensor) -> list[set[int]]:
    adj = [set() for _ in range(g.num_nodes)]
    for a, b in g.conn.edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    return adj


# --------------------------------------------------------------------------- statistics

def aggregate_node_column(g: GraphTensor, column: str, fn: str = "sum") -> float:
    """Reduce one named node column over all nodes."""
    names = g.node_columns or ()
    if column not in names:
        raise KeyError(f"graph has no node column {column!r}; columns are {list(names)}")
    j = names.index(column)
    return float(aggregate(g.X[:, j:j + 1].reshape(g.num_nodes, 1), fn)[0, 0])


def graph_statistics(g: GraphTensor, columns: Sequence[str] | None = None,
                     fns: Sequence[str] = ("sum", "mean", "max", "min")) -> FeatureVector:
    """Size counts plus aggregates of selected node columns.

    ``columns`` defaults to every named node column. An edgeless or empty
    graph yields zeros for the aggregates rather than an error.
    """
    for fn in fns:
        if fn not in AGGREGATORS:
            raise ValueError(f"unknown aggregator {fn!r}")
    deg = degrees(g).astype(float)
    n, m = g.num_nodes, g.num_edges
    names = ["num_nodes", "num_edges", "mean_degree", "max_degree"]
    values = [float(n), float(m), float(np.sort(deg).sum() / n) if n else 0.0,
              float(deg.max()) if n else 0.0]
    cols = list(g.node_columns or ()) if columns is None else list(columns)
    for c in cols:
        for fn in fns:
            names.append(f"{fn}({c})")
            values.append(aggregate_node_column(g, c, fn) if n else 0.0)
    return FeatureVector(np.array([values]), tuple(names))


def cycle_rank(g: GraphTensor) -> int:
    """Number of independent rings: M - N + (connected components), ignoring direction."""
    parent = list(range(g.num_nodes))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pairs = {(min(a, b), max(a, b)) for a, b in g.conn.edges if a != b}
    comps = g.num_nodes
    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            comps -= 1
    return len(pairs) - g.num_nodes + comps


def simple_cycles(g: GraphTensor, max_length: int = MAX_PATTERN_NODES) -> list[tuple[int, ...]]:
    """All simple cycles of length 3..max_length, each once, as node tuples.

    Each cycle starts at its smallest node and runs towards the smaller of
    that node's two cycle neighbours.
    """
    adj = [sorted(s) for s in _neighbour_sets(g)]
    out = []

    def extend(path, on_path):
        start, last = path[0], path[-1]
        for v in adj[last]:
            if v == start and len(path) >= 3 and path[1] < path[-1]:
                out.append(tuple(path))
            elif v > start and v not in on_path and len(path) < max_length:
                on_path.add(v)
                path.append(v)
                extend(path, on_path)
                path.pop()
                on_path.discard(v)

    for s in range(g.num_nodes):
        extend([s], {s})
    return sorted(out)


# --------------------------------------------------------------------------- matching

def _match_order(p: SubgraphPattern) -> list[int]:
    adj = {i: set() for i in range(p.num_nodes)}
    for a, b in p.edges:
        adj[a].add(b)
        adj[b].add(a)
    order, seen = [0], {0}
    i = 0
    while i < len(order):
        for v in sorted(adj[order[i]]):
            if v not in seen:
                seen.add(v)
                order.append(v)
        i += 1
    return order


def iter_matches(g: GraphTensor, p: SubgraphPattern):
    """Yield every label-respecting induced embedding as a tuple ``m`` with ``m[i]`` the image of pattern node i."""
    k, n = p.num_nodes, g.num_nodes
    if k > n:
        return
    adj = _neighbour_sets(g)
    labels = g.labels
    padj = {i: set() for i in range(k)}
    for a, b in p.edges:
        padj[a].add(b)
        padj[b].add(a)
    order = _match_order(p)
    image = [-1] * k
    used = set()

    def ok(pi, v):
        want = p.labels[pi]
        if want is not None and (labels is None or labels[v] != want):
            return False
        for pj in range(k):
            w = image[pj]
            if w >= 0 and (pj in padj[pi]) != (w in adj[v]):
                return False
        return True

    def rec(depth):
        if depth == k:
            yield tuple(image)
            return
        pi = order[depth]
        # candidates: neighbours of an already-mapped pattern neighbour
        anchor = next((pj for pj in order[:depth] if pj in padj[pi]), None)
        cands = sorted(adj[image[anchor]]) if anchor is not None else range(n)
        for v in cands:
            if v in used or not ok(pi, v):
                continue
            image[pi] = v
            used.add(v)
            yield from rec(depth + 1)
            used.discard(v)
            image[pi] = -1

    yield from rec(0)


def count_substructure(g: GraphTensor, p: SubgraphPattern) -> int:
    """Number of distinct node sets whose induced subgraph matches ``p`` with labels."""
    if p.num_nodes > MAX_PATTERN_NODES:
        if p.num_nodes > g.num_nodes:
            return 0
        raise ValueError(f"patterns are limited to {MAX_PATTERN_NODES} nodes")
    return len({frozenset(m) for m in iter_matches(g, p)})


def has_substructure(g: GraphTensor, p: SubgraphPattern) -> bool:
    return count_substructure(g, p) > 0


# --------------------------------------------------------------------------- fingerprints

@lru_cache(maxsize=4096)
def _canonical(kind: str, labels: tuple, edges: tuple) -> str:
    n = len(labels)
    best = None
    for perm in permutations(range(n)):
        # perm[new] = old
        inv = {old: new for new, old in enumerate(perm)}
        lab = ",".join("*" if labels[o] is None else str(labels[o]) for o in perm)
        es = sorted((min(inv[a], inv[b]), max(inv[a], inv[b])) for a, b in edges)
        s = f"{lab}|" + ";".join(f"{a}-{b}" for a, b in es)
        if best is None or s < best:
            best = s
    return f"{kind}:{n}:{best}"


def canonical_form(p: SubgraphPattern) -> str:
    """Relabelling-independent string: ``kind:n:labels|edges`` minimized over node orders."""
    return _canonical(p.kind, p.labels, p.edges)


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def pattern_bucket(p: SubgraphPattern, size: int) -> int:
    return fnv1a_64(canonical_form(p).encode("utf-8")) % size


def fingerprint(g: GraphTensor, patterns: Sequence[SubgraphPattern], size: int,
                binary: bool = False) -> FeatureVector:
    """Fold pattern counts into ``size`` buckets; colliding patterns add up.

    With ``binary`` each pattern contributes presence (0/1) instead of its count.
    """
    if size < 1:
        raise ValueError(f"fingerprint size must be at least 1, got {size}")
    values = np.zeros((1, size))
    for p in patterns:
        c = count_substructure(g, p)
        values[0, pattern_bucket(p, size)] += float(c > 0) if binary else float(c)
    return FeatureVector(values, tuple(f"fp{i}" for i in range(size)))


def default_patterns() -> list[SubgraphPattern]:
    """Generic rings and chains plus a few heteroatom motifs."""
    pats = [SubgraphPattern.path(2, "edge"), SubgraphPattern.path(3, "path3"),
            SubgraphPattern.path(4, "path4")]
    pats += [SubgraphPattern.cycle(k, f"ring{k}") for k in (3, 4, 5, 6)]
    pats += [SubgraphPattern.path(["C", "O"], "C-O"), SubgraphPattern.path(["C", "N"], "C-N"),
             SubgraphPattern.path(["C", "C"], "C-C"), SubgraphPattern.path(["O", "C", "O"], "O-C-O"),
             SubgraphPattern.cycle(["O", "C", "C", "C", "C", "C"], "oxane"),
             SubgraphPattern.cycle(["N", "C", "C", "C", "C", "C"], "azinane")]
    return pats
