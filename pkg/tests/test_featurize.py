import numpy as np
import pytest
from hypothesis import given, settings

from chemgraph.exceptions import EmptyAggregationError
from chemgraph.featurize import (FeatureVector, SubgraphPattern, aggregate_node_column, canonical_form,
                                 count_substructure, cycle_rank, default_patterns, fingerprint, fnv1a_64,
                                 graph_statistics, has_substructure, pattern_bucket, simple_cycles)
from chemgraph.graph import Connectivity, GraphTensor, permute_nodes
from oracles import brute_force_count, fnv1a_64_reference
from strategies import graph_and_permutation, random_graph

EDGE = SubgraphPattern.path(2)
PYRANOSE = SubgraphPattern.cycle(["O", "C", "C", "C", "C", "C"])


def test_feature_vector_invariants():
    with pytest.raises(ValueError):
        FeatureVector(np.zeros((1, 2)), ("a", "a"))
    with pytest.raises(ValueError):
        FeatureVector(np.zeros((1, 2)), ("a",))
    assert FeatureVector([1.0, 2.0], ("a", "b")).as_dict() == {"a": 1.0, "b": 2.0}


def test_pattern_validation():
    with pytest.raises(ValueError):
        SubgraphPattern(("C", "C", "C"), ((0, 1),))  # disconnected
    with pytest.raises(ValueError):
        SubgraphPattern((), ())
    with pytest.raises(ValueError):
        SubgraphPattern.cycle(2)
    p = SubgraphPattern(("C", "O"), ((1, 0), (0, 1)))
    assert p.edges == ((0, 1),)
    assert SubgraphPattern.from_dict(p.to_dict()) == p


def test_water_mass_column(load_fixture):
    assert aggregate_node_column(load_fixture("water"), "mass", "sum") == pytest.approx(18.015, abs=1e-12)


def test_aggregate_node_column_errors(load_fixture):
    with pytest.raises(KeyError):
        aggregate_node_column(load_fixture("water"), "charge")
    empty = GraphTensor(np.zeros((0, 1)), np.zeros((0, 1)), np.zeros((1, 0)), Connectivity((), 0),
                        node_columns=("mass",))
    with pytest.raises(EmptyAggregationError):
        aggregate_node_column(empty, "mass")


def test_single_node_mean():
    g = GraphTensor([[4.5]], np.zeros((0, 1)), np.zeros((1, 0)), Connectivity((), 1), node_columns=("m",))
    assert aggregate_node_column(g, "m", "mean") == 4.5


def test_g6p_counts(load_fixture):
    g = load_fixture("g6p")
    assert count_substructure(g, EDGE) == 16
    assert count_substructure(g, PYRANOSE) == 1
    assert has_substructure(g, PYRANOSE)
    assert not has_substructure(g, SubgraphPattern.cycle(5))
    assert simple_cycles(g) == [(0, 1, 2, 3, 4, 10)]
    assert cycle_rank(g) == 1


def test_pattern_larger_than_graph_gives_zero():
    g = random_graph(np.random.default_rng(1), 4)
    assert count_substructure(g, SubgraphPattern.path(9)) == 0


def test_induced_semantics():
    # triangle: a 3-path is not an induced subgraph, the triangle is
    tri = GraphTensor(np.zeros((3, 1)), np.zeros((3, 1)), np.zeros((1, 0)),
                      Connectivity(((0, 1), (1, 2), (0, 2)), 3), labels=("C", "C", "C"))
    assert count_substructure(tri, SubgraphPattern.path(3)) == 0
    assert count_substructure(tri, SubgraphPattern.cycle(3)) == 1
    assert count_substructure(tri, SubgraphPattern.path(["C", "C"])) == 3


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(11)
    pats = [SubgraphPattern.path(2), SubgraphPattern.path(3), SubgraphPattern.path(["C", "O"]),
            SubgraphPattern.cycle(3), SubgraphPattern.cycle(4), SubgraphPattern.cycle(["C", "C", "O", "C"]),
            SubgraphPattern((None, None, None, None), ((0, 1), (0, 2), (0, 3)), "motif")]
    for _ in range(60):
        g = random_graph(rng, max_nodes=7, p=float(rng.uniform(0.2, 0.7)))
        for p in pats:
            assert count_substructure(g, p) == brute_force_count(g, p)


def test_canonical_form_ignores_node_order():
    a = SubgraphPattern(("C", "O", "N"), ((0, 1), (1, 2)))
    b = SubgraphPattern(("N", "O", "C"), ((0, 1), (1, 2)))
    c = SubgraphPattern(("O", "C", "N"), ((0, 1), (0, 2)))
    assert canonical_form(a) == canonical_form(b) == canonical_form(c)
    assert canonical_form(EDGE) == "path:2:*,*|0-1"
    assert canonical_form(PYRANOSE) == "cycle:6:C,C,C,C,C,O|0-1;0-2;1-3;2-4;3-5;4-5"


def test_fnv1a_reference_vectors():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8
    for s in (b"path:2", canonical_form(PYRANOSE).encode()):
        assert fnv1a_64(s) == fnv1a_64_reference(s)


def test_g6p_fingerprint_buckets(load_fixture):
    g = load_fixture("g6p")
    fp = fingerprint(g, [EDGE, PYRANOSE], 8)
    assert (pattern_bucket(EDGE, 8), pattern_bucket(PYRANOSE, 8)) == (2, 4)
    assert fp.values.tolist() == [[0, 0, 16, 0, 1, 0, 0, 0]]
    assert fp.names[0] == "fp0"
    assert fingerprint(g, [EDGE, PYRANOSE], 8, binary=True).values.sum() == 2


def test_fingerprint_collisions_and_errors(load_fixture):
    g = load_fixture("g6p")
    pats = default_patterns()
    total = sum(count_substructure(g, p) for p in pats)
    assert fingerprint(g, pats, 1).values.tolist() == [[total]]
    for size in (2, 7, 64):
        assert fingerprint(g, pats, size).values.sum() == total
    with pytest.raises(ValueError):
        fingerprint(g, pats, 0)


def test_graph_statistics(load_fixture):
    fv = graph_statistics(load_fixture("water"), columns=["mass"], fns=["sum", "max"])
    d = fv.as_dict()
    assert d["num_nodes"] == 3 and d["num_edges"] == 2
    assert d["mean_degree"] == pytest.approx(4 / 3)
    assert d["sum(mass)"] == pytest.approx(18.015)
    assert d["max(mass)"] == pytest.approx(15.999)


@settings(max_examples=60, deadline=None)
@given(graph_and_permutation(max_nodes=7))
def test_featurizers_permutation_invariant(gp):
    g, perm = gp
    h = permute_nodes(g, perm)
    pats = default_patterns()
    assert np.array_equal(fingerprint(g, pats, 16).values, fingerprint(h, pats, 16).values)
    assert np.array_equal(graph_statistics(g).values, graph_statistics(h).values)
    assert cycle_rank(g) == cycle_rank(h)
    assert len(simple_cycles(g)) == len(simple_cycles(h))
