"""Augmented Lagrangian, its gradient, the Lyapunov function and KKT residuals."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List

import numpy as np

from .state import ADMMState, HyperParams


class _Layers:
    """Pre-activations, activations and constraint residuals of a state."""

    def __init__(self, state: ADMMState):
        N = state.N
        act = state.activation
        self.S, self.dS, self.R = [], [], []
        for i in range(1, N + 1):
            U = state.W[i - 1] @ state.V_at(i - 1)
            if i < N:
                S = act(U)
                self.S.append(S)
                self.dS.append(act.derivative(U))
            else:
                S = U
                self.S.append(S)
                self.dS.append(None)
            self.R.append(S - state.V[i - 1])


def _sq(A) -> float:
    return float(np.vdot(A, A).real)


def augmented_lagrangian(state: ADMMState, hp: HyperParams, Y=None, layers=None) -> float:
    Y = state.Y if Y is None else np.asarray(Y, dtype=float)
    beta = hp.betas(state.N)
    lay = layers or _Layers(state)
    val = 0.5 * _sq(state.V[-1] - Y) + 0.5 * hp.lam * sum(_sq(W) for W in state.W)
    for i in range(state.N):
        R = lay.R[i]
        val += 0.5 * beta[i] * _sq(R) + float(np.vdot(state.Lam[i], R))
    return val


def lyapunov(state: ADMMState, hp: HyperParams, tc, Y=None, layers=None) -> float:
    """Augmented Lagrangian plus ``sum_i xi_i ||V_i - V_prev_i||_F^2``.

    NaN when some ``xi_i`` is not finite (penalties outside the theory regime).
    """
    if not all(np.isfinite(x) for x in tc.xi):
        return float("nan")
    L = augmented_lagrangian(state, hp, Y, layers)
    prox = 0.0
    for xi, V, Vp in zip(tc.xi, state.V, state.V_prev):
        d = _sq(V - Vp)
        if d:
            prox += xi * d
    return L + prox


@dataclass
class Gradient:
    W: List[np.ndarray]
    V: List[np.ndarray]
    Lam: List[np.ndarray]

    def norm_sq(self) -> float:
        return sum(_sq(A) for A in (*self.W, *self.V, *self.Lam))

    def flat(self) -> np.ndarray:
        return np.concatenate([A.ravel() for A in (*self.W, *self.V, *self.Lam)])


def grad_augmented_lagrangian(state: ADMMState, hp: HyperParams, X=None, Y=None, layers=None) -> Gradient:
    """Partial derivatives of the augmented Lagrangian in every block.

    The multiplier partials are the raw constraint residuals.
    """
    if X is not None:
        state = _with_data(state, X, state.Y)
    Y = state.Y if Y is None else np.asarray(Y, dtype=float)
    N = state.N
    beta = hp.betas(N)
    lay = layers if (layers is not None and X is None) else _Layers(state)

    # P_i: derivative of layer i's penalty+multiplier terms w.r.t. its pre-activation
    P = []
    for i in range(N):
        T = beta[i] * lay.R[i] + state.Lam[i]
        P.append(T if i == N - 1 else T * lay.dS[i])

    gW = [hp.lam * state.W[i] + P[i] @ state.V_at(i).T for i in range(N)]
    gV = []
    for i in range(N):
        g = -(beta[i] * lay.R[i] + state.Lam[i])
        if i < N - 1:
            g = g + state.W[i + 1].T @ P[i + 1]
        else:
            g = g + (state.V[-1] - Y)
        gV.append(g)
    gL = [R.copy() for R in lay.R]
    return Gradient(gW, gV, gL)


def kkt_groups(state: ADMMState, hp: HyperParams, X=None, Y=None, layers=None) -> Dict[str, float]:
    """Squared Frobenius norms of the eight residual groups of the KKT system."""
    if X is not None:
        state = _with_data(state, X, state.Y)
    Y = state.Y if Y is None else np.asarray(Y, dtype=float)
    N = state.N
    lay = layers if (layers is not None and X is None) else _Layers(state)
    W, V, Lam = state.W, state.V, state.Lam
    g = dict.fromkeys(
        ["W_first", "W_hidden", "W_last", "Lam_hidden", "Lam_penultimate",
         "Lam_last", "feas_hidden", "feas_last"], 0.0)
    for i in range(1, N):
        r = hp.lam * W[i - 1] + (Lam[i - 1] * lay.dS[i - 1]) @ state.V_at(i - 1).T
        g["W_first" if i == 1 else "W_hidden"] += _sq(r)
    g["W_last"] = _sq(hp.lam * W[-1] + Lam[-1] @ state.V_at(N - 1).T)
    for i in range(1, N - 1):
        r = -Lam[i - 1] + W[i].T @ (Lam[i] * lay.dS[i])
        g["Lam_hidden"] += _sq(r)
    g["Lam_penultimate"] = _sq(-Lam[N - 2] + W[-1].T @ Lam[-1])
    g["Lam_last"] = _sq(-Lam[-1] + (V[-1] - Y))
    g["feas_hidden"] = sum(_sq(lay.R[i]) for i in range(N - 1))
    g["feas_last"] = _sq(lay.R[-1])
    return g


def kkt_residual(state: ADMMState, hp: HyperParams, X=None, Y=None, layers=None) -> float:
    return float(np.sqrt(sum(kkt_groups(state, hp, X, Y, layers).values())))


def _with_data(state: ADMMState, X, Y) -> ADMMState:
    return replace(state, X=np.asarray(X, dtype=float), Y=np.asarray(Y, dtype=float))
