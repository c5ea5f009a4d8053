"""Graph files, tensor dumps, datasets and checkpoints.

Graph file (JSON)::

    {"builder": "molecule" | "protein" | "reaction" | "process" | "generic" | "sequence",
     "directed": bool,
     "nodes": [{"id": str, ...attributes}],
     "edges": [{"src": id, "dst": id, ...attributes}],
     "global": {...attributes},
     "schema": {"node": [column], "edge": [column], "global": [column]},
     "positions": [[x, y, z], ...]}          # Angstrom, optional

A column is ``{"name", "kind": categorical|continuous|binary, "vocab"?, "unit"?}``.
Builder-specific switches (``explicit_hydrogens``, ``reversible_as_two_edges``,
``hydrogen_bonds``) may appear at the top level. A ``sequence`` file has
``frames: [{"time"?, "edges": [...]}]`` sharing the top-level ``nodes``.

Dataset CSV: header ``graph_path,target``; paths are relative to the CSV.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import encode
from .exceptions import CheckpointError, GraphFileError, ParseError
from .graph import GraphTensor

BUILDERS = ("molecule", "protein", "reaction", "process", "generic", "sequence")
OPTION_KEYS = ("explicit_hydrogens", "reversible_as_two_edges", "hydrogen_bonds")
# attributes each builder computes when a record omits them
DERIVED = {
    "molecule": {"node": {"mass"}, "edge": {"cyclic"}, "global": {"molecular_weight"}},
    "protein": {"node": {"mass"}, "edge": {"distance", "kind"}, "global": {"molar_mass", "num_residues"}},
    "process": {"global": {"total_energy", "total_cost"}},
}
CHECKPOINT_FORMAT = "chemgraph-checkpoint"
CHECKPOINT_VERSION = 1


# --------------------------------------------------------------------------- JSON

def read_json(path) -> Any:
    """Parse a JSON file, reporting syntax errors with 1-based line and column."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.msg, exc.lineno, exc.colno) from None


def dumps_canonical(doc) -> str:
    """Two-space indent and a trailing newline.

    Key order is kept because schema-free files take their column order
    from the first record's keys.
    """
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_json(path, doc) -> None:
    Path(path).write_text(dumps_canonical(doc), encoding="utf-8")


# --------------------------------------------------------------------------- graph files

def _is_list_of_dicts(value) -> bool:
    return isinstance(value, list) and all(isinstance(v, dict) for v in value)


def _check_records(nodes, edges, where: str, ids: list | None = None) -> list[str]:
    problems = []
    if ids is None:
        if not _is_list_of_dicts(nodes):
            return [f"{where}nodes must be a list of objects"]
        ids = []
        for i, n in enumerate(nodes):
            nid = n.get("id")
            if not isinstance(nid, str):
                problems.append(f"{where}node {i} needs a string id")
            ids.append(nid)
        dup = sorted({i for i in ids if isinstance(i, str) and ids.count(i) > 1})
        if dup:
            problems.append(f"{where}duplicate node ids {dup}")
    if not _is_list_of_dicts(edges):
        return problems + [f"{where}edges must be a list of objects"]
    known = set(ids)
    for k, e in enumerate(edges):
        for end in ("src", "dst"):
            if e.get(end) not in known:
                problems.append(f"{where}edge {k} {end}={e.get(end)!r} does not name a node")
    return problems


def _check_schema(doc) -> list[str]:
    schema = doc.get("schema")
    if schema is None:
        return []
    if not isinstance(schema, dict) or set(schema) - {"node", "edge", "global"}:
        return ["schema must be an object with node/edge/global column lists"]
    problems = []
    derived = DERIVED.get(doc.get("builder", "generic"), {})
    records = {"node": doc.get("nodes") or [], "edge": doc.get("edges") or [], "global": [doc.get("global") or {}]}
    for section, cols in schema.items():
        if not _is_list_of_dicts(cols):
            problems.append(f"schema.{section} must be a list of columns")
            continue
        for c in cols:
            name = c.get("name")
            if c.get("kind") not in encode.KINDS:
                problems.append(f"schema.{section} column {name!r} has kind {c.get('kind')!r}")
            missing = [i for i, r in enumerate(records[section]) if name not in r]
            if missing and name not in derived.get(section, ()):
                problems.append(f"schema.{section} column {name!r} is missing from {len(missing)} record(s)")
    return problems


def validate_document(doc) -> list[str]:
    """Structural problems in a parsed graph file; empty when usable."""
    if not isinstance(doc, dict):
        return ["top level must be a JSON object"]
    builder = doc.get("builder", "generic")
    if builder not in BUILDERS:
        return [f"unknown builder {builder!r}; expected one of {list(BUILDERS)}"]
    if builder == "sequence":
        frames = doc.get("frames")
        if not _is_list_of_dicts(frames) or not frames:
            return ["sequence files need a non-empty frames list"]
        problems = _check_records(doc.get("nodes"), [], "")
        ids = [n.get("id") for n in doc.get("nodes") or [] if isinstance(n, dict)]
        for t, fr in enumerate(frames):
            problems += _check_records(None, fr.get("edges"), f"frame {t}: ", ids)
        return problems
    problems = _check_records(doc.get("nodes"), doc.get("edges"), "")
    if "global" in doc and not isinstance(doc["global"], dict):
        problems.append("global must be an object")
    if "directed" in doc and not isinstance(doc["directed"], bool):
        problems.append("directed must be true or false")
    pos = doc.get("positions")
    if pos is not None:
        n = len(doc.get("nodes") or [])
        if not (isinstance(pos, list) and len(pos) == n
                and all(isinstance(p, list) and len(p) == 3 for p in pos)):
            problems.append(f"positions must be {n} [x, y, z] triples")
    return problems + _check_schema(doc)


def load_document(path) -> dict:
    doc = read_json(path)
    problems = validate_document(doc)
    if problems:
        raise GraphFileError([f"{path}: {p}" for p in problems])
    return doc


def _indexed(doc) -> tuple[list[dict], list[dict]]:
    index = {n["id"]: i for i, n in enumerate(doc["nodes"])}
    nodes = [dict(n) for n in doc["nodes"]]
    edges = [dict(e, src=index[e["src"]], dst=index[e["dst"]]) for e in doc.get("edges", [])]
    return nodes, edges


def build_document(doc: Mapping, builder: str | None = None, **options):
    """Turn a validated graph document into a GraphTensor (or GraphSequence).

    ``options`` override the document's builder switches.
    """
    builder = builder or doc.get("builder", "generic")
    if builder not in BUILDERS:
        raise GraphFileError(f"unknown builder {builder!r}")
    opts = {k: doc[k] for k in OPTION_KEYS if k in doc}
    opts.update({k: v for k, v in options.items() if v is not None})
    schema = doc.get("schema")
    glob = doc.get("global") or None
    if builder == "sequence":
        return encode.build_graph_sequence(doc["frames"] if "nodes" in doc["frames"][0] else
                                           [dict(fr, nodes=doc["nodes"]) for fr in doc["frames"]],
                                           timestamps=[fr["time"] for fr in doc["frames"]]
                                           if all("time" in fr for fr in doc["frames"]) else None,
                                           node_schema=(schema or {}).get("node"))
    nodes, edges = _indexed(doc)
    if builder == "molecule":
        return encode.build_molecule_graph(nodes, edges, explicit_hydrogens=bool(opts.get("explicit_hydrogens")),
                                           schema=schema, global_features=glob)
    if builder == "protein":
        cov = [e for e in edges if e.get("kind", "covalent") != "hydrogen"]
        hyd = [e for e in edges if e.get("kind") == "hydrogen"]
        use_h = opts.get("hydrogen_bonds", bool(hyd))
        strip = lambda es: [{k: v for k, v in e.items() if k != "kind"} for e in es]  # noqa: E731
        return encode.build_protein_graph(nodes, strip(cov), strip(hyd) if use_h else None,
                                          doc.get("positions"), schema=schema)
    if builder == "reaction":
        return encode.build_reaction_graph(nodes, edges,
                                           reversible_as_two_edges=bool(opts.get("reversible_as_two_edges")),
                                           schema=schema, global_features=glob)
    if builder == "process":
        return encode.build_process_graph(nodes, edges, schema=schema, global_features=glob)
    return encode.build_graph(nodes, edges, directed=bool(doc.get("directed", False)), schema=schema,
                              global_features=glob)


def load_graph(path, builder: str | None = None, **options):
    return build_document(load_document(path), builder, **options)


def graph_to_dict(g: GraphTensor) -> dict:
    """Plain-JSON dump of every tensor and the edge list."""
    out = {"directed": g.directed, "num_nodes": g.num_nodes, "num_edges": g.num_edges,
           "edges": [list(e) for e in g.conn.edges], "shapes": g.shapes(),
           "X": g.X.tolist(), "E": g.E.tolist(), "U": g.U.tolist(),
           "node_columns": list(g.node_columns or []), "edge_columns": list(g.edge_columns or []),
           "global_columns": list(g.global_columns or [])}
    if g.labels is not None:
        out["labels"] = list(g.labels)
    if g.aux:
        out["aux"] = {k: v.tolist() for k, v in g.aux.items()}
    return out


def molecule_document(atoms, bonds, schema=None, global_features=None, name=None) -> dict:
    """Graph-file document for index-based atoms/bonds."""
    ids = [f"a{i}" for i in range(len(atoms))]
    doc = {"builder": "molecule", "directed": False,
           "nodes": [dict(a, id=ids[i]) for i, a in enumerate(atoms)],
           "edges": [dict(b, src=ids[b["src"]], dst=ids[b["dst"]]) for b in bonds],
           "global": dict(global_features or {})}
    if schema is not None:
        doc["schema"] = {k: FS.to_list() for k, FS in schema.items()}
    if name:
        doc["name"] = name
    return doc


# --------------------------------------------------------------------------- datasets

def read_dataset(path) -> list[tuple[Path, float]]:
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"graph_path", "target"} <= set(reader.fieldnames):
            raise ParseError(path, "dataset header must be graph_path,target", 1, 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                y = float(row["target"])
            except (TypeError, ValueError):
                raise ParseError(path, f"target {row['target']!r} is not a number", lineno, 1) from None
            rows.append((path.parent / row["graph_path"], y))
    return rows


def load_dataset(path) -> tuple[list[GraphTensor], np.ndarray]:
    rows = read_dataset(path)
    graphs = [load_graph(p) for p, _ in rows]
    return graphs, np.array([y for _, y in rows]).reshape(-1, 1)


def write_dataset(path, entries) -> None:
    """``entries`` are (graph path relative to the CSV, target) pairs."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph_path", "target"])
        for p, y in entries:
            w.writerow([str(p), repr(float(y))])


# --------------------------------------------------------------------------- checkpoints

def save_checkpoint(path, payload: dict) -> None:
    write_json(path, {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, **payload})


def load_checkpoint(path) -> dict:
    try:
        doc = read_json(path)
    except ParseError as exc:
        raise CheckpointError(str(exc)) from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a chemgraph checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path} has checkpoint version {doc.get('version')}, "
                              f"expected {CHECKPOINT_VERSION}")
    return doc
