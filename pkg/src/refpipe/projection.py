"""Affine projections mapping visual feature vectors into the language space.

Weights are external inputs loaded from ARTF files; nothing here is
trained. The two-layer projector defaults to GELU between its layers, and
the activation is configurable because no single choice is canonical.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erf
from sklearn.base import BaseEstimator

from ._validation import check_vectors
from .feature_store import WeightMatrix


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def identity(x: np.ndarray) -> np.ndarray:
    return x


ACTIVATIONS = {"gelu": gelu, "relu": relu, "tanh": np.tanh, "linear": identity}


def _resolve_activation(activation):
    if callable(activation):
        return activation
    try:
        return ACTIVATIONS[activation]
    except KeyError:
        raise ValueError(
            f"unknown activation {activation!r}, expected one of {sorted(ACTIVATIONS)}"
        ) from None


def _affine(x: np.ndarray, w: WeightMatrix) -> np.ndarray:
    if x.shape[-1] != w.rows:
        raise ValueError(f"input dim {x.shape[-1]} does not match weight rows {w.rows}")
    y = x @ w.weights.astype(np.float64)
    if w.bias is not None:
        y = y + w.bias.astype(np.float64)
    return y


def linear_project(v, w: WeightMatrix) -> np.ndarray:
    """Single affine map v @ W + b, accepting one vector or a stack of rows."""
    x = np.asarray(v, dtype=np.float64)
    single = x.ndim == 1
    y = _affine(check_vectors(x), w)
    y = y.astype(np.float32)
    return y[0] if single else y


def mlp_project(v, w1: WeightMatrix, w2: WeightMatrix, activation="gelu") -> np.ndarray:
    """Two-layer projection: (act(v @ W1 + b1)) @ W2 + b2."""
    act = _resolve_activation(activation)
    x = np.asarray(v, dtype=np.float64)
    single = x.ndim == 1
    h = act(_affine(check_vectors(x), w1))
    y = _affine(h, w2).astype(np.float32)
    return y[0] if single else y


class LinearProjector(BaseEstimator):
    """Estimator wrapper around a loaded affine map; transform applies it row-wise."""

    def __init__(self, weights: WeightMatrix | None = None):
        self.weights = weights

    def fit(self, X=None, y=None):
        if self.weights is None:
            raise ValueError("LinearProjector requires loaded weights")
        return self

    def transform(self, X) -> np.ndarray:
        self.fit()
        return linear_project(X, self.weights)


class MlpProjector(BaseEstimator):
    """Two-layer projector with a configurable activation between the layers."""

    def __init__(self, w1: WeightMatrix | None = None, w2: WeightMatrix | None = None,
                 activation="gelu"):
        self.w1 = w1
        self.w2 = w2
        self.activation = activation

    def fit(self, X=None, y=None):
        if self.w1 is None or self.w2 is None:
            raise ValueError("MlpProjector requires both layer weights")
        _resolve_activation(self.activation)
        return self

    def transform(self, X) -> np.ndarray:
        self.fit()
        return mlp_project(X, self.w1, self.w2, self.activation)
