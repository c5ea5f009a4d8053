"""Feature-based regressors: least squares, Gaussian processes and R^2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, ShapeError, UndefinedMetricError
from .tensor import as_tensor, shape_str

GP_JITTERS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def _targets(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1, 1) if np.ndim(y) < 2 else as_tensor(y, name="y")
    if y.shape != (n, 1):
        raise ShapeError(f"targets must be {n}x1, got {shape_str(y)}")
    if not np.all(np.isfinite(y)):
        raise NumericalError("targets contain NaN or Inf")
    return y


# --------------------------------------------------------------------------- linear

@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # 1 x d
    bias: float

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    def predict(self, X) -> np.ndarray:
        X = as_tensor(X, name="X")
        if X.shape[1] != self.width:
            raise ShapeError(f"model was fitted on {self.width} features, got {X.shape[1]}")
        return X @ self.weights.T + self.bias


def linreg_fit(X, y) -> LinearModel:
    """Least squares through the centred normal equations.

    Well-conditioned systems are solved exactly. When the Gram matrix is
    rank deficient or its condition number exceeds 1e12, a ridge term
    ``1e-10 * trace(Xc^T Xc) / d`` is added so the system stays solvable.
    """
    X = as_tensor(X, name="X")
    n, d = X.shape
    if n < 1:
        raise ShapeError("linreg_fit needs at least one sample")
    y = _targets(y, n)
    xm = X.mean(axis=0, keepdims=True)
    ym = float(y.mean())
    Xc, yc = X - xm, y - ym
    G = Xc.T @ Xc
    rhs = Xc.T @ yc
    if np.linalg.cond(G) > 1e12:
        tr = float(np.trace(G))
        G = G + (1e-10 * tr / d if tr > 0 else 1e-10) * np.eye(d)
    try:
        w = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"normal equations are singular: {exc}") from None
    if not np.all(np.isfinite(w)):
        raise NumericalError("normal equations produced non-finite weights")
    return LinearModel(w.T.copy(), float(ym - (xm @ w)[0, 0]))


def linreg_predict(m: LinearModel, X) -> np.ndarray:
    return m.predict(X)


def r2_score(pred, y) -> float:
    """Coefficient of determination ``1 - SS_res / SS_tot``."""
    pred = np.asarray(pred, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if pred.shape != y.shape:
        raise ShapeError(f"{pred.size} predictions for {y.size} targets")
    if y.size < 2:
        raise UndefinedMetricError("R^2 needs at least two targets")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("R^2 is undefined for constant targets")
    return 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot


def mean_squared_error(pred, y) -> float:
    pred = np.asarray(pred, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if pred.shape != y.shape:
        raise ShapeError(f"{pred.size} predictions for {y.size} targets")
    return float(np.mean((pred - y) ** 2))


# --------------------------------------------------------------------------- gaussian process

def rbf_kernel(A, B, lengthscale: float = 1.0, variance: float = 1.0) -> np.ndarray:
    """``variance * exp(-|a - b|^2 / (2 lengthscale^2))`` for every row pair."""
    A = as_tensor(A, name="A")
    B = as_tensor(B, name="B")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"kernel inputs {shape_str(A)} and {shape_str(B)} have different widths")
    sq = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
    return variance * np.exp(-sq / (2.0 * lengthscale ** 2))


@dataclass(frozen=True)
class GpModel:
    X: np.ndarray
    y: np.ndarray
    lengthscale: float
    signal_variance: float
    noise_variance: float
    L: np.ndarray       # lower Cholesky factor of K + (noise + jitter) I
    alpha: np.ndarray   # (K + noise I)^-1 y
    jitter: float = 0.0

    def __post_init__(self):
        if not self.lengthscale > 0 or not self.signal_variance > 0:
            raise ValueError("lengthscale and signal variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")


def gp_fit(X, y, lengthscale: float = 1.0, signal_variance: float = 1.0,
           noise_variance: float = 0.0) -> GpModel:
    """Factorize ``K + noise I``, adding diagonal jitter only if the factorization fails.

    No jitter is tried first, then 1e-12 up to 1e-6 (relative to the signal variance);
    cost is cubic in the number of training points.
    """
    if not lengthscale > 0 or not signal_variance > 0:
        raise ValueError("lengthscale and signal variance must be positive")
    if noise_variance < 0:
        raise ValueError("noise variance must be non-negative")
    X = as_tensor(X, name="X")
    y = _targets(y, X.shape[0])
    K = rbf_kernel(X, X, lengthscale, signal_variance)
    eye = np.eye(X.shape[0])
    for jitter in GP_JITTERS:
        try:
            L = np.linalg.cholesky(K + (noise_variance + jitter * signal_variance) * eye)
        except np.linalg.LinAlgError:
            continue
        alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
        return GpModel(X, y, float(lengthscale), float(signal_variance), float(noise_variance),
                       L, alpha, jitter)
    raise NumericalError("kernel matrix is not positive definite even with 1e-6 jitter")


def gp_predict(m: GpModel, Xs) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent variance, each n* x 1; variance is clamped at 0."""
    Xs = as_tensor(Xs, name="x*")
    if Xs.shape[1] != m.X.shape[1]:
        raise ShapeError(f"model was fitted on {m.X.shape[1]} features, got {Xs.shape[1]}")
    Ks = rbf_kernel(m.X, Xs, m.lengthscale, m.signal_variance)
    mean = Ks.T @ m.alpha
    v = np.linalg.solve(m.L, Ks)
    var = m.signal_variance - np.sum(v * v, axis=0).reshape(-1, 1)
    return mean, np.maximum(var, 0.0)
