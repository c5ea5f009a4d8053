import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chemgraph.exceptions import EmptyAggregationError, NonFiniteError, ShapeError
from chemgraph.tensor import AGGREGATORS, aggregate, as_tensor, concat_cols, concat_rows, matmul

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_rank_canonicalization():
    assert as_tensor(3.0).shape == (1, 1)
    assert as_tensor([1, 2, 3]).shape == (1, 3)
    with pytest.raises(ShapeError):
        as_tensor(np.zeros((2, 2, 2)))
    with pytest.raises(NonFiniteError):
        as_tensor([1.0, np.nan])


def test_matmul_identity_and_hand_oracle():
    assert np.array_equal(matmul(np.eye(2), [[5], [6]]), [[5], [6]])
    a, b = [[1, 2], [3, 4]], [[5], [6]]
    # triple-loop oracle
    expect = [[sum(a[i][k] * b[k][j] for k in range(2)) for j in range(1)] for i in range(2)]
    assert matmul(a, b).tolist() == expect == [[17.0], [39.0]]
    assert matmul(np.ones((1, 9)), np.ones((9, 2))).shape == (1, 2)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match="2x3 by 2x3"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@settings(max_examples=50)
@given(arrays(float, (3, 4), elements=finite), arrays(float, (4, 2), elements=finite),
       arrays(float, (2, 3), elements=finite))
def test_matmul_associative(a, b, c):
    left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
    scale = max(1.0, np.abs(left).max())
    assert np.allclose(left, right, atol=1e-9 * scale, rtol=0)


def test_concat_cols_widths():
    assert concat_cols([np.ones((1, 2)), np.ones((1, 3)), np.ones((1, 1))]).shape == (1, 6)
    assert concat_cols([np.ones((1, 2)), np.ones((1, 3)), np.ones((1, 3)), np.ones((1, 1))]).shape == (1, 9)
    single = np.array([[1.0, 2.0]])
    assert np.array_equal(concat_cols([single]), single)
    with pytest.raises(ValueError):
        concat_cols([])
    with pytest.raises(ShapeError):
        concat_cols([np.ones((2, 2))])


@given(st.lists(st.integers(1, 5), min_size=1, max_size=6))
def test_concat_cols_width_is_sum(widths):
    parts = [np.zeros((1, w)) for w in widths]
    assert concat_cols(parts).shape[1] == sum(widths)


def test_concat_rows_rejects_mixed_widths():
    assert concat_rows([np.ones((1, 2)), np.ones((3, 2))]).shape == (4, 2)
    with pytest.raises(ShapeError):
        concat_rows([np.ones((1, 2)), np.ones((1, 3))])


def test_aggregate_water_mass():
    assert aggregate([[1.008], [1.008], [15.999]], "sum")[0, 0] == pytest.approx(18.015, abs=1e-12)


def test_aggregate_values():
    rows = np.array([[1.0, -2.0], [3.0, 4.0], [5.0, 0.0]])
    assert aggregate(rows, "sum").tolist() == [[9.0, 2.0]]
    assert aggregate(rows, "mean").tolist() == [[3.0, 2.0 / 3.0]]
    assert aggregate(rows, "max").tolist() == [[5.0, 4.0]]
    assert aggregate(rows, "min").tolist() == [[1.0, -2.0]]
    # population variance
    assert np.allclose(aggregate(rows, "variance"), rows.var(axis=0, keepdims=True))
    assert np.array_equal(aggregate(np.full((4, 3), 2.5), "variance"), np.zeros((1, 3)))


def test_aggregate_errors():
    with pytest.raises(EmptyAggregationError):
        aggregate(np.zeros((0, 3)), "sum")
    with pytest.raises(ValueError):
        aggregate([[1.0]], "median")


def test_aggregate_bit_stable_under_permutation():
    rng = np.random.default_rng(0)
    for _ in range(100):
        rows = rng.normal(size=(int(rng.integers(1, 30)), 4)) * 10 ** rng.uniform(-3, 6)
        perm = rng.permutation(rows.shape[0])
        for fn in AGGREGATORS:
            assert np.array_equal(aggregate(rows, fn), aggregate(rows[perm], fn))
