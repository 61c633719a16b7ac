"""Bias-free fully-connected networks with sigmoid or ReLU hidden layers.

Matrices use the column-per-sample layout: a layer response ``V_i`` has shape
``(d_i, n)`` and a weight ``W_i`` has shape ``(d_i, d_{i-1})``. The last layer
is always linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class Activation:
    """Hidden-layer activation with certified bounds.

    ``bounds`` holds ``(L0, L1, L2)``: sup-norm bounds on the activation,
    its derivative and its second derivative. ReLU is unbounded, so its
    bounds are ``inf`` and it is only used by the SGD baseline.
    """

    kind: str = "sigmoid"
    bounds: Tuple[float, float, float] = (1.0, 0.25, 0.25)

    def __post_init__(self):
        if self.kind not in ("sigmoid", "relu"):
            raise ValueError(f"unknown activation {self.kind!r}")

    def __call__(self, u):
        if self.kind == "sigmoid":
            return sigmoid(u)
        return np.maximum(u, 0.0)

    def derivative(self, u):
        if self.kind == "sigmoid":
            return sigmoid_prime(u)
        # subgradient 0 at the kink
        return (np.asarray(u) > 0).astype(float)


SIGMOID = Activation("sigmoid", (1.0, 0.25, 0.25))
RELU = Activation("relu", (np.inf, 1.0, np.inf))


def activation(kind: str) -> Activation:
    return {"sigmoid": SIGMOID, "relu": RELU}[kind]


def sigmoid(u):
    """Logistic function, safe for arbitrarily large ``|u|``."""
    return expit(u)


def sigmoid_prime(u):
    s = expit(u)
    return s * (1.0 - s)


def lipschitz_bound(c_abs: float, act: Activation = SIGMOID) -> float:
    """Upper bound on the Lipschitz constant of ``d/du (act(u) - c)^2``.

    Equals ``2 L2 (L0 + |c|) + 2 L1^2``.
    """
    if c_abs < 0:
        raise ValueError(f"c_abs must be nonnegative, got {c_abs}")
    L0, L1, L2 = act.bounds
    return 2.0 * L2 * (L0 + c_abs) + 2.0 * L1**2


def max_norm(A) -> float:
    A = np.asarray(A)
    return float(np.max(np.abs(A))) if A.size else 0.0


@dataclass
class NetParams:
    weights: List[np.ndarray]
    activation: Activation = field(default_factory=lambda: SIGMOID)

    def __post_init__(self):
        self.weights = [np.asarray(W, dtype=float) for W in self.weights]
        if not self.weights:
            raise ValueError("a network needs at least one layer")
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(
                    f"layer {i + 1} expects {self.weights[i].shape[1]} inputs, "
                    f"layer {i} produces {self.weights[i - 1].shape[0]}"
                )

    @property
    def depth(self) -> int:
        """Number of weight layers ``N`` (hidden layers + 1)."""
        return len(self.weights)

    @property
    def dims(self) -> List[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def num_params(self) -> int:
        return sum(W.size for W in self.weights)

    def copy(self) -> "NetParams":
        return NetParams([W.copy() for W in self.weights], self.activation)


def forward(net: NetParams, X) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Evaluate the net on the columns of ``X``.

    Returns the output and the list of layer responses ``[V_1, ..., V_N]``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != net.weights[0].shape[1]:
        raise ValueError(
            f"input has shape {X.shape}, first layer expects "
            f"{net.weights[0].shape[1]} rows"
        )
    responses = []
    V = X
    N = net.depth
    for i, W in enumerate(net.weights, start=1):
        U = W @ V
        V = net.activation(U) if i < N else U
        responses.append(V)
    return V, responses


def predict(net: NetParams, X) -> np.ndarray:
    return forward(net, X)[0]


def empirical_loss(net: NetParams, X, Y, reg: float) -> float:
    """``(1/n) sum_j ||net(x_j) - y_j||^2 + reg * sum_i ||W_i||_F^2``."""
    if reg < 0:
        raise ValueError("regularization must be nonnegative")
    Y = np.asarray(Y, dtype=float)
    out = predict(net, X)
    if out.shape != Y.shape:
        raise ValueError(f"output shape {out.shape} != target shape {Y.shape}")
    n = Y.shape[1]
    fit = np.sum((out - Y) ** 2) / n
    return float(fit + reg * sum(np.sum(W**2) for W in net.weights))


def mse(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    return float(np.mean((pred - truth) ** 2))


def check_dims(dims: Sequence[int]) -> List[int]:
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"invalid layer widths {dims}")
    return dims
