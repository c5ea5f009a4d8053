"""Multilayer perceptron with an analytic backward pass and plain SGD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import NonFiniteError, ShapeError, TrainingError
from .tensor import as_tensor, shape_str

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass(frozen=True)
class MlpParams:
    """Dense layers ``(W, b)`` with ``W`` fan_in x fan_out and ``b`` 1 x fan_out.

    ``activation`` is applied after every layer except the last, whose output
    is linear.
    """

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        layers = []
        for i, (W, b) in enumerate(self.layers):
            W = np.asarray(W, dtype=float)
            b = np.asarray(b, dtype=float).reshape(1, -1)
            if W.ndim != 2 or b.shape[1] != W.shape[1]:
                raise ShapeError(f"layer {i}: weight {shape_str(W)} and bias {shape_str(b)} disagree")
            if layers and layers[-1][0].shape[1] != W.shape[0]:
                raise ShapeError(f"layer {i} expects {W.shape[0]} inputs, previous layer gives "
                                 f"{layers[-1][0].shape[1]}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise NonFiniteError(f"layer {i} has non-finite parameters")
            layers.append((W, b))
        if not layers:
            raise ShapeError("an MLP needs at least one layer")
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def in_width(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def out_width(self) -> int:
        return self.layers[-1][0].shape[1]

    @property
    def widths(self) -> list[int]:
        return [self.in_width] + [W.shape[1] for W, _ in self.layers]

    def arrays(self) -> list[np.ndarray]:
        return [a for layer in self.layers for a in layer]

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        it = iter(arrays)
        return MlpParams(tuple((next(it), next(it)) for _ in self.layers), self.activation)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_vector(self, vec) -> "MlpParams":
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.asarray(vec[pos:pos + a.size], dtype=float).reshape(a.shape))
            pos += a.size
        return self.with_arrays(out)


def init_mlp(widths: Sequence[int], activation: str = "relu", rng=None) -> MlpParams:
    """Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(rng)
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        s = np.sqrt(6.0 / max(fan_in + fan_out, 1))
        layers.append((rng.uniform(-s, s, size=(fan_in, fan_out)), np.zeros((1, fan_out))))
    return MlpParams(tuple(layers), activation)


def _activate(z, name):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(z, a, name):
    if name == "relu":
        return (z > 0).astype(float)
    if name == "tanh":
        return 1.0 - a ** 2
    return np.ones_like(z)


def dense(x: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``x @ W`` with a summation order that does not depend on a row's position.

    BLAS kernels treat rows differently depending on where they fall in a
    block, which would make permuted inputs differ in the last bit.
    """
    return np.einsum("ij,jk->ik", x, W)


def mlp_forward_cache(x: np.ndarray, p: MlpParams):
    if x.ndim != 2 or x.shape[1] != p.in_width:
        raise ShapeError(f"input {shape_str(x)} does not match MLP fan-in {p.in_width}")
    cache = []
    h = x
    last = len(p.layers) - 1
    for i, (W, b) in enumerate(p.layers):
        z = dense(h, W) + b
        a = z if i == last else _activate(z, p.activation)
        cache.append((h, z, a))
        h = a
    return h, cache


def mlp_forward(x, p: MlpParams) -> np.ndarray:
    """Apply the network row by row; ``x`` is n x fan_in."""
    out, _ = mlp_forward_cache(as_tensor(x, name="input"), p)
    return out


def mlp_backward(dout: np.ndarray, p: MlpParams, cache):
    """Backpropagate ``dL/d(output)``; returns (parameter grads, dL/d(input))."""
    grads = []
    delta = dout
    last = len(p.layers) - 1
    for i in range(last, -1, -1):
        W, _ = p.layers[i]
        h, z, a = cache[i]
        if i != last:
            delta = delta * _activate_grad(z, a, p.activation)
        grads.append((h.T @ delta, delta.sum(axis=0, keepdims=True)))
        delta = delta @ W.T
    return MlpParams(tuple(reversed(grads)), p.activation), delta


def mse_loss(pred, target) -> float:
    pred = as_tensor(pred, name="pred")
    target = as_tensor(target, name="target")
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {shape_str(pred)} and target {shape_str(target)} differ")
    if pred.size == 0:
        return 0.0
    with np.errstate(over="ignore"):  # callers check for a non-finite loss
        return float(np.mean((pred - target) ** 2))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    return 2.0 * (pred - target) / max(pred.size, 1)


def mlp_gradients(x, target, p: MlpParams) -> MlpParams:
    """Gradient of ``mse_loss(mlp_forward(x, p), target)`` for every parameter."""
    x = as_tensor(x, name="input")
    target = as_tensor(target, name="target")
    out, cache = mlp_forward_cache(x, p)
    if out.shape != target.shape:
        raise ShapeError(f"output {shape_str(out)} and target {shape_str(target)} differ")
    grads, _ = mlp_backward(mse_grad(out, target), p, cache)
    return grads


def sgd_step(p: MlpParams, grads: MlpParams, lr: float) -> MlpParams:
    new = []
    for i, ((W, b), (gW, gb)) in enumerate(zip(p.layers, grads.layers)):
        if W.shape != gW.shape or b.shape != gb.shape:
            raise ShapeError(f"layer {i}: gradient shape does not match parameters")
        new.append((W - lr * gW, b - lr * gb))
    if len(new) != len(p.layers):
        raise ShapeError("gradient has a different number of layers")
    return MlpParams(tuple(new), p.activation)


def train_mlp(x, y, p: MlpParams, *, epochs: int, lr: float, seed: int = 0,
              batch_size: int | None = None):
    """Gradient descent on MSE; full batch unless ``batch_size`` is set.

    Returns the trained parameters and the per-epoch training loss measured
    before each epoch's updates.
    """
    x = as_tensor(x, name="input")
    y = as_tensor(y, name="target")
    if y.shape[0] != x.shape[0]:
        y = y.reshape(x.shape[0], -1)
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    history = []
    for epoch in range(epochs):
        loss = mse_loss(mlp_forward(x, p), y)
        if not np.isfinite(loss):
            raise TrainingError(f"loss became non-finite at epoch {epoch}")
        history.append(loss)
        if batch_size is None or batch_size >= n:
            batches = [np.arange(n)]
        else:
            order = rng.permutation(n)
            batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
        for idx in batches:
            p = sgd_step(p, mlp_gradients(x[idx], y[idx], p), lr)
    return p, history
