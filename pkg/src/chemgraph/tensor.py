"""Dense rank <= 2 tensors backed by numpy.

Every value in chemgraph is carried as a 2-D ``float64`` array. Scalars are
1x1 and vectors are 1xn row vectors, so shapes can always be compared as
``(rows, cols)`` pairs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import EmptyAggregationError, NonFiniteError, ShapeError

AGGREGATORS = ("sum", "mean", "max", "min", "variance")


def as_tensor(value, *, name: str = "tensor") -> np.ndarray:
    """Canonicalize ``value`` to a finite 2-D float array.

    Rank-0 input becomes 1x1 and rank-1 input becomes a 1xn row vector.
    """
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim > 2:
        raise ShapeError(f"{name}: rank {arr.ndim} tensors are not supported")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name}: contains NaN or Inf")
    return arr


def shape_str(a: np.ndarray) -> str:
    return "x".join(str(d) for d in np.shape(a))


def matmul(a, b) -> np.ndarray:
    a = as_tensor(a, name="left operand")
    b = as_tensor(b, name="right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {shape_str(a)} by {shape_str(b)}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"matmul of {shape_str(a)} and {shape_str(b)} overflowed")
    return out


def concat_cols(parts: Sequence) -> np.ndarray:
    """Join single-row tensors side by side, in list order."""
    if len(parts) == 0:
        raise ValueError("concat_cols needs at least one part")
    arrays = [as_tensor(p, name=f"part {i}") for i, p in enumerate(parts)]
    for i, arr in enumerate(arrays):
        if arr.shape[0] != 1:
            raise ShapeError(f"part {i} has shape {shape_str(arr)}; expected one row")
    if len(arrays) == 1:
        return arrays[0]
    return np.concatenate(arrays, axis=1)


def concat_rows(parts: Sequence) -> np.ndarray:
    arrays = [as_tensor(p, name=f"part {i}") for i, p in enumerate(parts)]
    widths = {a.shape[1] for a in arrays}
    if len(widths) > 1:
        raise ShapeError(f"row blocks have different widths: {sorted(widths)}")
    return np.concatenate(arrays, axis=0)


def aggregate(rows, fn: str = "sum") -> np.ndarray:
    """Column-wise permutation-invariant reduction of an n x f tensor to 1 x f.

    ``sum``, ``mean`` and ``variance`` accumulate each column in sorted order,
    so the result is bit-identical under any reordering of the rows.
    ``variance`` is the population variance (divides by n).
    """
    if fn not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {fn!r}; choose from {AGGREGATORS}")
    rows = as_tensor(rows, name="rows")
    n = rows.shape[0]
    if n == 0:
        raise EmptyAggregationError(f"cannot {fn}-aggregate an empty 0x{rows.shape[1]} tensor")
    if fn == "max":
        return rows.max(axis=0, keepdims=True)
    if fn == "min":
        return rows.min(axis=0, keepdims=True)
    total = np.sort(rows, axis=0).sum(axis=0, keepdims=True)
    if fn == "sum":
        return total
    mean = total / n
    if fn == "mean":
        return mean
    sq = (rows - mean) ** 2
    return np.sort(sq, axis=0).sum(axis=0, keepdims=True) / n
