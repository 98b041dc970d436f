"""Loss models with per-sample values and gradients.

Four kinds are supported:

- ``squared``: (<x, w> - y)^2, the linear regression loss.
- ``logistic_l2``: ln(1 + exp(-y <w, x>)) + reg_lambda/2 * ||w||^2 with labels
  in {-1, +1}.
- ``biweight``: the bounded redescending regression loss on the residual
  t = <x, w> - y, saturating at c^2/6 for |t| >= c.
- ``mean_squared``: ||x - w||^2, the location-estimation objective (the
  response is ignored).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import Dataset

__all__ = [
    "LossModel",
    "loss_value",
    "loss_values",
    "per_sample_gradient",
    "gradient_rows",
    "mean_gradient",
    "empirical_risk",
]

_KINDS = ("squared", "logistic_l2", "biweight", "mean_squared")


@dataclass(frozen=True)
class LossModel:
    kind: str
    reg_lambda: float = 0.0
    biweight_c: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.reg_lambda < 0.0:
            raise ValueError("regularisation weight must be nonnegative")
        if not self.biweight_c > 0.0:
            raise ValueError("biweight threshold must be positive")

    @classmethod
    def squared(cls) -> "LossModel":
        return cls("squared")

    @classmethod
    def logistic(cls, reg_lambda: float = 0.0) -> "LossModel":
        return cls("logistic_l2", reg_lambda=reg_lambda)

    @classmethod
    def biweight(cls, c: float = 1.0) -> "LossModel":
        return cls("biweight", biweight_c=c)

    @classmethod
    def mean_squared(cls) -> "LossModel":
        return cls("mean_squared")


def _check_labels(y) -> None:
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("logistic labels must be -1 or +1")


def _biweight_psi(t, c):
    """Loss of the residual: (c^2/6) * (1 - (1 - (t/c)^2)^3) capped at c^2/6."""
    t = np.asarray(t, dtype=float)
    u = np.clip(1.0 - (t / c) ** 2, 0.0, None)
    return c * c / 6.0 * (1.0 - u**3)


def _biweight_dpsi(t, c):
    """Derivative t * (1 - (t/c)^2)^2 inside |t| <= c, identically 0 outside."""
    t = np.asarray(t, dtype=float)
    u = 1.0 - (t / c) ** 2
    return np.where(np.abs(t) <= c, t * u * u, 0.0)


def loss_values(model: LossModel, w, X, y) -> np.ndarray:
    """Per-row loss over a feature matrix, vectorised."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if model.kind == "squared":
        r = X @ w - y
        return r * r
    if model.kind == "logistic_l2":
        _check_labels(y)
        margin = y * (X @ w)
        return np.logaddexp(0.0, -margin) + model.reg_lambda / 2.0 * float(w @ w)
    if model.kind == "biweight":
        return _biweight_psi(X @ w - y, model.biweight_c)
    diff = X - w
    return np.einsum("ij,ij->i", diff, diff)


def loss_value(model: LossModel, w, x, y: float) -> float:
    """Loss of a single sample."""
    return float(loss_values(model, w, np.atleast_2d(np.asarray(x, dtype=float)), np.atleast_1d(y))[0])


def gradient_rows(model: LossModel, w, X, y) -> np.ndarray:
    """Per-sample gradients stacked as an (n, d) matrix."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if model.kind == "squared":
        r = X @ w - y
        return 2.0 * X * r[:, None]
    if model.kind == "logistic_l2":
        _check_labels(y)
        weight = -y * expit(-y * (X @ w))
        return weight[:, None] * X + model.reg_lambda * w
    if model.kind == "biweight":
        return _biweight_dpsi(X @ w - y, model.biweight_c)[:, None] * X
    return 2.0 * (w - X)


def per_sample_gradient(model: LossModel, w, x, y: float) -> np.ndarray:
    """Gradient of the loss at one sample."""
    return gradient_rows(model, w, np.atleast_2d(np.asarray(x, dtype=float)), np.atleast_1d(y))[0]


def mean_gradient(model: LossModel, w, X, y) -> np.ndarray:
    """Exact full-sample gradient, computed without materialising the rows."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if model.kind == "squared":
        return 2.0 / n * (X.T @ (X @ w - y))
    if model.kind == "logistic_l2":
        _check_labels(y)
        weight = -y * expit(-y * (X @ w))
        return X.T @ weight / n + model.reg_lambda * w
    if model.kind == "biweight":
        return X.T @ _biweight_dpsi(X @ w - y, model.biweight_c) / n
    return 2.0 * (w - X.mean(axis=0))


def empirical_risk(model: LossModel, w, data: Dataset) -> float:
    """Mean loss over the dataset."""
    if data.n < 1:
        raise ValueError("empirical risk needs at least one row")
    return float(np.mean(loss_values(model, w, data.features, data.responses)))
