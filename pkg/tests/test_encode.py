import numpy as np
import pytest

from chemgraph.encode import (Column, FeatureSchema, amino_acid_masses, build_graph, build_graph_sequence,
                              build_molecule_graph, build_process_graph, build_protein_graph,
                              build_reaction_graph, element_masses, one_hot)
from chemgraph.exceptions import EncodingError, GraphValidationError


def test_one_hot():
    assert one_hot("N", ["C", "N", "O"]).tolist() == [[0, 1, 0]]
    with pytest.raises(EncodingError):
        one_hot("S", ["C", "N", "O"])


def test_schema_widths_and_names():
    s = FeatureSchema((Column("element", "categorical", ("C", "O")), Column("charge", "continuous"),
                       Column("aromatic", "binary")))
    assert s.width == 4
    assert s.names == ["element=C", "element=O", "charge", "aromatic"]
    assert s.encode([{"element": "O", "charge": -0.5, "aromatic": True}]).tolist() == [[0, 1, -0.5, 1]]
    assert s.encode([]).shape == (0, 4)
    with pytest.raises(EncodingError):
        s.encode_record({"element": "O", "charge": "high", "aromatic": 0})
    with pytest.raises(EncodingError):
        s.encode_record({"element": "O", "aromatic": 0})


def test_schema_derive_kinds():
    s = FeatureSchema.derive([{"id": "a", "x": 1.5, "flag": True, "kind": "b"}, {"kind": "a", "x": 2, "flag": False}])
    assert [(c.name, c.kind) for c in s.columns] == [("x", "continuous"), ("flag", "binary"), ("kind", "categorical")]
    assert s.columns[2].vocab == ("a", "b")


def test_water_masses_from_table():
    m = element_masses()
    g = build_molecule_graph([{"element": "O", "h_count": 2}], [], explicit_hydrogens=True)
    assert g.num_nodes == 3 and g.num_edges == 2
    assert sum(m[e] for e in g.labels) == pytest.approx(18.015, abs=1e-9)
    assert g.U[0, 0] == pytest.approx(18.015)


def test_g6p_dimensions(load_fixture):
    imp = load_fixture("g6p")
    assert imp.shapes() == {"X": "16x6", "E": "16x3", "A": "16x16", "U": "1x1"}
    exp = load_fixture("g6p", explicit_hydrogens=True)
    assert (exp.X.shape, exp.E.shape) == ((29, 4), (29, 3))
    assert exp.U[0, 0] == pytest.approx(imp.U[0, 0])
    # C6H13O9P
    assert imp.U[0, 0] == pytest.approx(260.135, abs=0.01)


def test_cyclic_flag_computed_when_missing():
    atoms = [{"element": "C", "h_count": 2} for _ in range(3)] + [{"element": "O", "h_count": 1}]
    bonds = [{"src": 0, "dst": 1, "order": "single"}, {"src": 1, "dst": 2, "order": "single"},
             {"src": 2, "dst": 0, "order": "single"}, {"src": 0, "dst": 3, "order": "single"}]
    g = build_molecule_graph(atoms, bonds)
    assert g.E[:, g.edge_columns.index("cyclic")].tolist() == [1, 1, 1, 0]


def test_explicit_mode_rejects_hydrogen_count_column():
    schema = {"node": [{"name": "h_count", "kind": "continuous"}]}
    with pytest.raises(EncodingError):
        build_molecule_graph([{"element": "C", "h_count": 4}], [], explicit_hydrogens=True, schema=schema)


def test_missing_endpoint():
    with pytest.raises(GraphValidationError):
        build_graph([{"a": 1}], [{"src": 0, "dst": 3}])


def test_protein_graph_features():
    res = [{"residue": r} for r in "GAG"]
    cov = [{"src": 0, "dst": 1, "distance": 3.8}, {"src": 1, "dst": 2, "distance": 3.8}]
    g = build_protein_graph(res, cov)
    aa = amino_acid_masses()
    assert g.node_columns == ("mass", "residue=A", "residue=G")
    assert g.E.shape == (2, 1)
    assert g.U[0, 0] == pytest.approx(2 * aa["G"] + aa["A"] - 2 * 18.015, abs=1e-6)
    assert g.U[0, 1] == 3
    with_h = build_protein_graph(res, cov, [{"src": 0, "dst": 2, "distance": 5.0}])
    assert with_h.E.shape == (3, 3)
    assert with_h.E[2].tolist() == [5.0, 0.0, 1.0]
    with pytest.raises(GraphValidationError):
        build_protein_graph(res, cov + [{"src": 1, "dst": 0, "distance": 3.8}])
    with pytest.raises(GraphValidationError):
        build_protein_graph(res, [{"src": 0, "dst": 1, "distance": 0.0}])


def test_protein_distance_matrix(load_fixture):
    g = load_fixture("1l2y")
    AD = g.aux["AD"]
    assert AD.shape == (20, 20) and np.allclose(AD, AD.T) and np.all(np.diag(AD) == 0)
    steps = np.diag(AD, 1)
    assert np.all((steps > 3.6) & (steps < 4.0))


def test_reaction_graph_modes():
    species = [{"name": "A", "p": 0}, {"name": "B", "p": 1}, {"name": "C", "p": 1}]
    rx = [{"src": 0, "dst": 1, "delta_g": -2.0, "reversible": True},
          {"src": 1, "dst": 2, "delta_g": -5.0, "reversible": False}]
    und = build_reaction_graph(species, rx)
    assert not und.directed and und.num_edges == 2
    two = build_reaction_graph(species, rx, reversible_as_two_edges=True)
    assert two.directed and two.conn.edges == ((0, 1), (1, 0), (1, 2))
    dg = two.E[:, two.edge_columns.index("delta_g")]
    assert dg.tolist() == [-2.0, 2.0, -5.0]


def test_process_graph_totals():
    units = [{"name": "cook", "time": 1, "cost": 10, "energy": 5}, {"name": "mill", "time": 2, "cost": 3, "energy": 1}]
    g = build_process_graph(units, [{"src": 0, "dst": 1, "mass": 4.0, "volume": 2.0}])
    assert g.directed and g.X.shape == (2, 3) and g.E.shape == (1, 2)
    assert dict(zip(g.global_columns, g.U[0])) == {"total_energy": 6.0, "total_cost": 13.0}


def test_graph_sequence_shares_edge_vocab():
    nodes = [{"id": "a", "m": 1.0}, {"id": "b", "m": 2.0}, {"id": "c", "m": 3.0}]
    frames = [{"nodes": nodes, "edges": [{"src": "a", "dst": "b", "kind": "x"}, {"src": "b", "dst": "c", "kind": "y"}]},
              {"nodes": nodes, "edges": [{"src": "a", "dst": "b", "kind": "x"}]}]
    seq = build_graph_sequence(frames, timestamps=[0, 1])
    assert [f.E.shape for f in seq.frames] == [(2, 2), (1, 2)]
    with pytest.raises(GraphValidationError):
        build_graph_sequence([frames[0], {"nodes": nodes[:2], "edges": []}])


def test_decaalanine_frames(load_fixture):
    seq = load_fixture("decaalanine")
    assert [f.num_edges for f in seq.frames] == [15, 11, 9]
    kinds = seq.frames[0].edge_columns
    counts = [dict(zip(kinds, f.E.sum(axis=0))) for f in seq.frames]
    assert [c["kind=peptide"] for c in counts] == [9, 9, 9]
    assert [c["kind=hydrogen"] for c in counts] == [6, 2, 0]
