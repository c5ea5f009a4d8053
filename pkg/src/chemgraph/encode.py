"""Feature schemas and builders for molecules, proteins, reaction networks,
process flowsheets and time-ordered graph sequences.

Builders take plain Python records (dicts) with 0-based integer endpoints and
return validated :class:`~chemgraph.graph.GraphTensor` values. File loading
and id resolution live in :mod:`chemgraph.io`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from numbers import Real
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import EncodingError, GraphValidationError
from .graph import Connectivity, GraphTensor, check_graph, pairwise_distances

KINDS = ("categorical", "continuous", "binary")
BOND_ORDERS = ("single", "double", "triple", "aromatic")
RESERVED_KEYS = frozenset({"id", "src", "dst", "reversible", "name", "label"})


@lru_cache(maxsize=None)
def _table(name: str) -> dict:
    return json.loads(resources.files("chemgraph").joinpath("data", name).read_text())


def element_masses() -> dict[str, float]:
    return dict(_table("elements.json")["masses"])


def element_valence() -> dict[str, int]:
    return dict(_table("elements.json")["valence"])


def amino_acid_masses() -> dict[str, float]:
    return dict(_table("amino_acids.json")["masses"])


def one_hot(value, vocab: Sequence) -> np.ndarray:
    """1 x len(vocab) indicator row with a single 1 at ``vocab.index(value)``."""
    vocab = list(vocab)
    if value not in vocab:
        raise EncodingError(f"value {value!r} is not in vocabulary {vocab}")
    row = np.zeros((1, len(vocab)))
    row[0, vocab.index(value)] = 1.0
    return row


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    vocab: tuple | None = None
    unit: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EncodingError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.vocab:
                raise EncodingError(f"categorical column {self.name!r} needs a vocabulary")
            vocab = tuple(self.vocab)
            if len(set(vocab)) != len(vocab):
                raise EncodingError(f"column {self.name!r} has duplicate vocabulary entries")
            object.__setattr__(self, "vocab", vocab)

    @property
    def width(self) -> int:
        return len(self.vocab) if self.kind == "categorical" else 1

    @property
    def names(self) -> list[str]:
        if self.kind == "categorical":
            return [f"{self.name}={v}" for v in self.vocab]
        return [self.name]

    def encode(self, record: Mapping[str, Any]) -> np.ndarray:
        if self.name not in record:
            raise EncodingError(f"record is missing attribute {self.name!r}")
        value = record[self.name]
        if self.kind == "categorical":
            try:
                return one_hot(value, self.vocab)
            except EncodingError as exc:
                raise EncodingError(f"column {self.name!r}: {exc}") from None
        if self.kind == "binary":
            if value not in (0, 1, True, False):
                raise EncodingError(f"binary column {self.name!r} got {value!r}")
            return np.array([[float(value)]])
        if isinstance(value, bool) or not isinstance(value, Real):
            raise EncodingError(f"continuous column {self.name!r} got {value!r}")
        return np.array([[float(value)]])

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind}
        if self.vocab is not None:
            out["vocab"] = list(self.vocab)
        if self.unit is not None:
            out["unit"] = self.unit
        return out


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered roster of columns mapping raw attributes to feature columns."""

    columns: tuple[Column, ...] = ()

    def __post_init__(self):
        cols = tuple(c if isinstance(c, Column) else Column(**c) for c in self.columns)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise EncodingError(f"duplicate column names in schema: {names}")
        object.__setattr__(self, "columns", cols)

    @property
    def width(self) -> int:
        return sum(c.width for c in self.columns)

    @property
    def names(self) -> list[str]:
        return [n for c in self.columns for n in c.names]

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def encode_record(self, record: Mapping[str, Any]) -> np.ndarray:
        if not self.columns:
            return np.zeros((1, 0))
        return np.concatenate([c.encode(record) for c in self.columns], axis=1)

    def encode(self, records: Sequence[Mapping[str, Any]]) -> np.ndarray:
        if len(records) == 0:
            return np.zeros((0, self.width))
        return np.concatenate([self.encode_record(r) for r in records], axis=0)

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.columns]

    @classmethod
    def coerce(cls, value) -> "FeatureSchema":
        if isinstance(value, FeatureSchema):
            return value
        return cls(tuple(value))

    @classmethod
    def derive(cls, records: Iterable[Mapping[str, Any]], exclude: Iterable[str] = ()) -> "FeatureSchema":
        """Infer columns from raw records.

        Keys are taken in order of first appearance. Booleans become binary
        columns, numbers continuous, anything else categorical with a sorted
        vocabulary of the observed values.
        """
        skip = set(exclude) | RESERVED_KEYS
        seen: dict[str, list] = {}
        for rec in records:
            for k, v in rec.items():
                if k not in skip:
                    seen.setdefault(k, []).append(v)
        cols = []
        for k, values in seen.items():
            if all(isinstance(v, bool) for v in values):
                cols.append(Column(k, "binary"))
            elif all(isinstance(v, Real) and not isinstance(v, bool) for v in values):
                cols.append(Column(k, "continuous"))
            else:
                cols.append(Column(k, "categorical", _sorted_vocab(values)))
        return cls(tuple(cols))


def _sorted_vocab(values) -> tuple:
    uniq = set(values)
    try:
        return tuple(sorted(uniq))
    except TypeError:
        return tuple(sorted(uniq, key=repr))


def _schemas(schema) -> dict[str, FeatureSchema | None]:
    schema = dict(schema or {})
    unknown = set(schema) - {"node", "edge", "global"}
    if unknown:
        raise EncodingError(f"schema has unknown sections {sorted(unknown)}")
    return {k: FeatureSchema.coerce(schema[k]) if schema.get(k) is not None else None
            for k in ("node", "edge", "global")}


def _check_endpoints(edges: Sequence[Mapping], n: int, what: str) -> None:
    bad = []
    for k, e in enumerate(edges):
        for end in ("src", "dst"):
            idx = e.get(end)
            if not isinstance(idx, (int, np.integer)) or not 0 <= idx < n:
                bad.append(f"{what} {k} references missing endpoint {end}={idx!r}")
    if bad:
        raise GraphValidationError(bad)


def _assemble(nodes, edges, node_schema, edge_schema, global_schema, global_record,
              *, directed, aux=None, labels=None) -> GraphTensor:
    conn = Connectivity(tuple((e["src"], e["dst"]) for e in edges), len(nodes), directed)
    g = GraphTensor(
        X=node_schema.encode(nodes),
        E=edge_schema.encode(edges),
        U=global_schema.encode_record(global_record),
        conn=conn,
        aux=aux or {},
        node_columns=tuple(node_schema.names),
        edge_columns=tuple(edge_schema.names),
        global_columns=tuple(global_schema.names),
        labels=labels,
    )
    return check_graph(g)


def _in_cycle(n: int, pairs: Sequence[tuple[int, int]], k: int) -> bool:
    """True when edge ``k`` lies on a cycle, i.e. it is not a bridge."""
    src, dst = pairs[k]
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for j, (a, b) in enumerate(pairs):
        if j != k:
            adj[a].append(b)
            adj[b].append(a)
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def build_graph(nodes, edges, *, directed=False, schema=None, global_features=None) -> GraphTensor:
    """Schema-driven builder for arbitrary attributed graphs."""
    nodes = [dict(n) for n in nodes]
    edges = [dict(e) for e in edges]
    _check_endpoints(edges, len(nodes), "edge")
    sch = _schemas(schema)
    glob = dict(global_features or {})
    return _assemble(
        nodes, edges,
        sch["node"] or FeatureSchema.derive(nodes),
        sch["edge"] or FeatureSchema.derive(edges),
        sch["global"] or FeatureSchema.derive([glob]),
        glob, directed=directed,
        labels=tuple(str(n["label"]) for n in nodes) if all("label" in n for n in nodes) and nodes else None,
    )


def build_molecule_graph(atoms, bonds, *, explicit_hydrogens=False, schema=None,
                         global_features=None) -> GraphTensor:
    """Molecular graph with atoms as nodes and covalent bonds as edges.

    Atoms need ``element`` and, in implicit-hydrogen mode, ``h_count``. The
    default node schema is one-hot element plus one-hot hydrogen count over
    its observed range; with ``explicit_hydrogens`` every implicit hydrogen
    becomes its own node and the hydrogen-count column is dropped. Bonds carry
    ``order`` and optionally ``cyclic``; a missing cyclic flag is computed
    from ring membership. The default global feature is molecular weight.
    """
    masses = element_masses()
    atoms = [dict(a) for a in atoms]
    bonds = [dict(b) for b in bonds]
    _check_endpoints(bonds, len(atoms), "bond")
    sch = _schemas(schema)
    for i, a in enumerate(atoms):
        if "element" not in a:
            raise EncodingError(f"atom {i} has no element")
        if "mass" not in a and a["element"] in masses:
            a["mass"] = masses[a["element"]]

    if explicit_hydrogens:
        if sch["node"] is not None and "h_count" in sch["node"]:
            raise EncodingError("hydrogen-count column requested in explicit-hydrogen mode")
        heavy = len(atoms)
        for i in range(heavy):
            for _ in range(int(atoms[i].pop("h_count", 0) or 0)):
                atoms.append({"element": "H", "mass": masses["H"]})
                bonds.append({"src": i, "dst": len(atoms) - 1, "order": "single", "cyclic": False})
    elif any("h_count" not in a for a in atoms) and sch["node"] is None:
        raise EncodingError("implicit-hydrogen mode needs an h_count on every atom")

    pairs = [(b["src"], b["dst"]) for b in bonds]
    for k, b in enumerate(bonds):
        if "cyclic" not in b:
            b["cyclic"] = _in_cycle(len(atoms), pairs, k)

    node_schema = sch["node"]
    if node_schema is None:
        cols = [Column("element", "categorical", _sorted_vocab(a["element"] for a in atoms))]
        if not explicit_hydrogens:
            counts = [int(a["h_count"]) for a in atoms]
            cols.append(Column("h_count", "categorical", tuple(range(min(counts), max(counts) + 1))))
        node_schema = FeatureSchema(tuple(cols))
    edge_schema = sch["edge"]
    if edge_schema is None:
        observed = {b.get("order") for b in bonds}
        extra = sorted(o for o in observed if o not in BOND_ORDERS and o is not None)
        vocab = tuple(o for o in BOND_ORDERS if o in observed) + tuple(extra)
        cols = [Column("order", "categorical", vocab)] if vocab else []
        edge_schema = FeatureSchema(tuple(cols) + (Column("cyclic", "binary"),))

    glob = dict(global_features or {})
    mw = sum(a.get("mass", 0.0) + masses["H"] * int(a.get("h_count", 0) or 0) for a in atoms)
    glob.setdefault("molecular_weight", round(mw, 6))
    global_schema = sch["global"] or FeatureSchema((Column("molecular_weight", "continuous", unit="g/mol"),))
    return _assemble(atoms, bonds, node_schema, edge_schema, global_schema, glob,
                     directed=False, labels=tuple(a["element"] for a in atoms))


def build_protein_graph(residues, covalent_bonds, hydrogen_bonds=None, coords=None, *,
                        schema=None) -> GraphTensor:
    """Residue-level protein graph.

    Nodes carry residue molar mass and one-hot residue type. Covalent-only
    graphs have a single distance (Angstrom) edge column; when
    ``hydrogen_bonds`` is given the hydrogen bonds are appended as extra edges
    and a one-hot covalent/hydrogen bond type is added. With ``coords`` the
    full pairwise distance matrix is attached as ``aux["AD"]``.
    """
    aa = amino_acid_masses()
    residues = [dict(r) for r in residues]
    for i, r in enumerate(residues):
        if "residue" not in r:
            raise EncodingError(f"residue {i} has no residue type")
        if "mass" not in r:
            if r["residue"] not in aa:
                raise EncodingError(f"unknown residue type {r['residue']!r} and no mass given")
            r["mass"] = aa[r["residue"]]
    n = len(residues)
    dist = pairwise_distances(coords) if coords is not None else None
    if dist is not None and dist.shape[0] != n:
        raise GraphValidationError([f"{dist.shape[0]} coordinates for {n} residues"])

    bonds = [dict(b, kind="covalent") for b in covalent_bonds]
    if hydrogen_bonds is not None:
        bonds += [dict(b, kind="hydrogen") for b in hydrogen_bonds]
    _check_endpoints(bonds, n, "bond")
    seen = set()
    for k, b in enumerate(bonds):
        key = frozenset((b["src"], b["dst"]))
        if key in seen:
            raise GraphValidationError([f"duplicate bond between residues {b['src']} and {b['dst']}"])
        seen.add(key)
        if "distance" not in b:
            if dist is None:
                raise EncodingError(f"bond {k} has no distance and no coordinates were given")
            b["distance"] = float(dist[b["src"], b["dst"]])
        if not b["distance"] > 0:
            raise GraphValidationError([f"bond {k} has non-positive distance {b['distance']}"])

    sch = _schemas(schema)
    node_schema = sch["node"] or FeatureSchema((
        Column("mass", "continuous", unit="g/mol"),
        Column("residue", "categorical", _sorted_vocab(r["residue"] for r in residues)),
    ))
    edge_cols = [Column("distance", "continuous", unit="angstrom")]
    if hydrogen_bonds is not None:
        edge_cols.append(Column("kind", "categorical", ("covalent", "hydrogen")))
    edge_schema = sch["edge"] or FeatureSchema(tuple(edge_cols))

    if dist is None:
        dist = np.zeros((n, n))
        for b in bonds:
            dist[b["src"], b["dst"]] = dist[b["dst"], b["src"]] = b["distance"]
    total = sum(r["mass"] for r in residues) - _table("amino_acids.json")["water"] * max(n - 1, 0)
    glob = {"molar_mass": round(total, 6), "num_residues": n}
    global_schema = sch["global"] or FeatureSchema((
        Column("molar_mass", "continuous", unit="g/mol"), Column("num_residues", "continuous")))
    return _assemble(residues, bonds, node_schema, edge_schema, global_schema, glob,
                     directed=False, aux={"AD": dist},
                     labels=tuple(r["residue"] for r in residues))


def build_reaction_graph(species, reactions, *, reversible_as_two_edges=False, schema=None,
                         global_features=None, negate_on_reverse=("delta_g",)) -> GraphTensor:
    """Reaction network with molecules as nodes and reactions as edges.

    By default each reaction is one undirected edge. With
    ``reversible_as_two_edges`` the graph becomes directed and every reaction
    tagged ``reversible`` contributes a forward edge followed by its reverse;
    attributes named in ``negate_on_reverse`` flip sign on the reverse edge.
    """
    species = [dict(s) for s in species]
    reactions = [dict(r) for r in reactions]
    _check_endpoints(reactions, len(species), "reaction")
    edges = []
    for r in reactions:
        edges.append(r)
        if reversible_as_two_edges and r.get("reversible", False):
            back = dict(r, src=r["dst"], dst=r["src"])
            for key in negate_on_reverse:
                if key in back:
                    back[key] = -back[key]
            edges.append(back)
    sch = _schemas(schema)
    glob = dict(global_features or {})
    node_schema = sch["node"] or FeatureSchema.derive(species)
    edge_schema = sch["edge"] or FeatureSchema.derive(reactions)
    global_schema = sch["global"] or FeatureSchema.derive([glob])
    labels = tuple(str(s["name"]) for s in species) if species and all("name" in s for s in species) else None
    return _assemble(species, edges, node_schema, edge_schema, global_schema, glob,
                     directed=reversible_as_two_edges, labels=labels)


def build_process_graph(units, streams, *, schema=None, global_features=None) -> GraphTensor:
    """Directed flowsheet: unit operations as nodes, material streams as edges.

    Units carry ``time``, ``cost`` and ``energy``; streams carry ``mass`` and
    ``volume``. Without explicit globals the total energy and total cost are
    used.
    """
    units = [dict(u) for u in units]
    streams = [dict(s) for s in streams]
    _check_endpoints(streams, len(units), "stream")
    sch = _schemas(schema)
    node_schema = sch["node"] or FeatureSchema(tuple(Column(k, "continuous") for k in ("time", "cost", "energy")))
    edge_schema = sch["edge"] or FeatureSchema(tuple(Column(k, "continuous") for k in ("mass", "volume")))
    if global_features is None:
        glob = {"total_energy": sum(u.get("energy", 0.0) for u in units),
                "total_cost": sum(u.get("cost", 0.0) for u in units)}
    else:
        glob = dict(global_features)
    global_schema = sch["global"] or FeatureSchema.derive([glob])
    labels = tuple(str(u["name"]) for u in units) if units and all("name" in u for u in units) else None
    return _assemble(units, streams, node_schema, edge_schema, global_schema, glob,
                     directed=True, labels=labels)


@dataclass(frozen=True)
class GraphSequence:
    """Time-ordered graphs over one fixed, identically ordered node set."""

    frames: tuple[GraphTensor, ...]
    timestamps: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.timestamps is not None:
            ts = tuple(float(t) for t in self.timestamps)
            if len(ts) != len(self.frames):
                raise GraphValidationError([f"{len(ts)} timestamps for {len(self.frames)} frames"])
            object.__setattr__(self, "timestamps", ts)
        counts = {f.num_nodes for f in self.frames}
        if len(counts) > 1:
            raise GraphValidationError([f"frames have different node counts: {sorted(counts)}"])

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i) -> GraphTensor:
        return self.frames[i]


def build_graph_sequence(frames, *, timestamps=None, node_schema=None) -> GraphSequence:
    """Build one graph per frame.

    Each frame is a mapping with ``nodes`` (dicts with an ``id``) and
    ``edges`` (dicts with ``src``/``dst`` ids and an optional ``kind``). All
    frames must list the same node ids in the same order. Node features and
    the one-hot edge ``kind`` vocabulary are shared across frames.
    """
    frames = list(frames)
    if not frames:
        raise GraphValidationError(["a graph sequence needs at least one frame"])
    ids = [n["id"] for n in frames[0]["nodes"]]
    for t, fr in enumerate(frames[1:], start=1):
        other = [n["id"] for n in fr["nodes"]]
        if other != ids:
            raise GraphValidationError([f"frame {t} node set differs from frame 0"])
    index = {nid: i for i, nid in enumerate(ids)}
    nodes = [dict(n) for n in frames[0]["nodes"]]
    nsch = FeatureSchema.coerce(node_schema) if node_schema is not None else FeatureSchema.derive(nodes)
    kinds = _sorted_vocab(e.get("kind", "edge") for fr in frames for e in fr["edges"]) or ("edge",)
    esch = FeatureSchema((Column("kind", "categorical", kinds),))
    out = []
    for t, fr in enumerate(frames):
        edges = []
        for e in fr["edges"]:
            if e["src"] not in index or e["dst"] not in index:
                raise GraphValidationError([f"frame {t} edge references unknown node"])
            edges.append({"src": index[e["src"]], "dst": index[e["dst"]], "kind": e.get("kind", "edge")})
        out.append(_assemble(nodes, edges, nsch, esch, FeatureSchema(), {}, directed=False,
                             labels=tuple(str(i) for i in ids)))
    return GraphSequence(tuple(out), timestamps)
