"""Containers shared by the ADMM update kernels and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from ..net import SIGMOID, Activation

MODES = ("practical", "theory")


@dataclass
class HyperParams:
    """ADMM hyperparameters.

    ``beta`` is either one penalty shared by all layers or a sequence with
    one entry per layer (``beta[0]`` belongs to layer 1). ``kkt_tol <= 0``
    disables the KKT stopping rule.
    """

    lam: float = 1e-6
    beta: float | Sequence[float] = 1.0
    mode: str = "practical"
    epochs: int = 2000
    kkt_tol: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if np.any(~(b > 0)):
            raise ValueError(f"all beta must be positive, got {self.beta}")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")

    def betas(self, N: int) -> np.ndarray:
        """Per-layer penalties ``[beta_1, ..., beta_N]``."""
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if b.size == 1:
            return np.full(N, float(b[0]))
        if b.size != N:
            raise ValueError(f"got {b.size} penalties for a {N}-layer net")
        return b.copy()


@dataclass
class LLACoefficients:
    """Curvature constants of the linearized subproblems.

    ``h[i-1]`` belongs to the ``W_i`` update (i = 1..N-1) and ``mu[j-1]`` to
    the ``V_j`` update (j = 1..N-2).
    """

    h: List[float]
    mu: List[float]


@dataclass
class ADMMState:
    """Primal blocks, multipliers and the previous-V shadow.

    Lists are 0-based: ``W[i-1]`` is ``W_i``. ``X``/``Y`` ride along because
    ``V_0 = X`` enters the first-layer updates and ``Y`` the last one.
    ``lla`` holds the coefficients that produced this iterate (None at k=0).
    """

    W: List[np.ndarray]
    V: List[np.ndarray]
    Lam: List[np.ndarray]
    V_prev: List[np.ndarray]
    X: np.ndarray
    Y: np.ndarray
    k: int = 0
    lla: Optional[LLACoefficients] = None
    activation: Activation = field(default_factory=lambda: SIGMOID)

    @property
    def N(self) -> int:
        return len(self.W)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def V_at(self, j: int) -> np.ndarray:
        """Response of layer ``j`` with ``V_0 = X``."""
        return self.X if j == 0 else self.V[j - 1]

    def copy(self) -> "ADMMState":
        return replace(
            self,
            W=[A.copy() for A in self.W],
            V=[A.copy() for A in self.V],
            Lam=[A.copy() for A in self.Lam],
            V_prev=[A.copy() for A in self.V_prev],
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(A)) for A in (*self.W, *self.V, *self.Lam))
