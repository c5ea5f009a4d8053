import numpy as np
import pytest
from hypothesis import given

from chemgraph.exceptions import GraphValidationError, ShapeError
from chemgraph.graph import (Connectivity, GraphTensor, adjacency_list, adjacency_matrix, check_graph,
                             contact_adjacency, degrees, pairwise_distances, permute_nodes, validate)
from strategies import graph_and_permutation, graphs


def path4():
    conn = Connectivity(((0, 1), (1, 2), (2, 3)), 4)
    return GraphTensor(np.arange(4.0).reshape(4, 1), np.ones((3, 1)), np.zeros((1, 1)), conn)


def test_undirected_edges_canonicalized():
    c = Connectivity(((2, 1), (0, 3)), 4)
    assert c.edges == ((1, 2), (0, 3))
    assert Connectivity(((2, 1),), 3, directed=True).edges == ((2, 1),)


def test_adjacency_matrix_path():
    A = adjacency_matrix(path4())
    expect = np.array([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 1, 0]], dtype=float)
    assert np.array_equal(A, expect)
    assert np.array_equal(A, A.T)


def test_adjacency_directed_is_asymmetric():
    A = adjacency_matrix(Connectivity(((0, 1),), 2, directed=True))
    assert A.tolist() == [[0, 1], [0, 0]]


def test_adjacency_list_round_trip_and_order():
    conn = adjacency_list(adjacency_matrix(path4()))
    assert conn.edges == ((0, 1), (1, 2), (2, 3))
    with pytest.raises(GraphValidationError):
        adjacency_list([[0, 1], [0, 0]], directed=False)
    assert adjacency_list([[0, 1], [0, 0]], directed=True).edges == ((0, 1),)
    with pytest.raises(ShapeError):
        adjacency_list(np.zeros((2, 3)))


@given(graphs())
def test_matrix_list_views_agree(g):
    A = adjacency_matrix(g)
    assert np.array_equal(adjacency_matrix(adjacency_list(A, directed=g.directed)), A)
    assert set(adjacency_list(A, directed=g.directed).edges) == set(g.conn.edges)


def test_validate_reports_each_violation():
    conn = Connectivity(((0, 1), (1, 5), (2, 2)), 3)
    g = GraphTensor(np.zeros((3, 1)), np.zeros((2, 1)), np.zeros((1, 1)), conn,
                    aux={"AD": np.array([[0, 1, 0], [2, 0, 0], [0, 0, 0]])})
    problems = validate(g)
    assert any("outside" in p for p in problems)
    assert any("self-loop" in p for p in problems)
    assert "edge tensor rows (2) != edge count (3)" in problems
    assert any("asymmetric" in p for p in problems)
    with pytest.raises(GraphValidationError) as info:
        check_graph(g)
    assert len(info.value.violations) == len(problems)


def test_self_loops_allowed_when_flagged():
    conn = Connectivity(((0, 0),), 1, allow_self_loops=True)
    assert validate(GraphTensor(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 0)), conn)) == []


def test_graph_tensor_is_immutable():
    g = path4()
    with pytest.raises(ValueError):
        g.X[0, 0] = 9.0


def test_contact_adjacency_cutoff():
    pos = [[0, 0, 0], [3, 0, 0], [9, 0, 0]]
    assert contact_adjacency(pos, 5.0).tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    assert contact_adjacency(pos, 6.0)[1, 2] == 1
    with pytest.raises(ValueError):
        contact_adjacency(pos, 0.0)
    assert pairwise_distances(pos)[0, 2] == 9.0


@given(graph_and_permutation())
def test_permute_conjugates_adjacency(gp):
    g, p = gp
    h = permute_nodes(g, p)
    P = np.eye(g.num_nodes)[p]
    assert np.array_equal(adjacency_matrix(h), P @ adjacency_matrix(g) @ P.T)
    assert np.array_equal(h.X, g.X[p])
    assert np.array_equal(h.E, g.E)
    assert validate(h) == []
    assert sorted(degrees(h).tolist()) == sorted(degrees(g).tolist())


def test_permute_rejects_non_bijection():
    with pytest.raises(GraphValidationError):
        permute_nodes(path4(), [0, 0, 1, 2])


def test_shapes_report():
    assert path4().shapes() == {"X": "4x1", "E": "3x1", "A": "4x4", "U": "1x1"}
