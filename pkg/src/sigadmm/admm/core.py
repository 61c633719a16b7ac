"""Closed-form block updates and the backward-W / forward-V / parallel-multiplier sweep."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..net import NetParams, forward, lipschitz_bound, max_norm
from .objective import (
    _Layers,
    _sq,
    augmented_lagrangian,
    grad_augmented_lagrangian,
    kkt_residual,
    lyapunov,
)
from .state import ADMMState, HyperParams, LLACoefficients

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    pass


def _spd_solve(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``M Z = B`` for symmetric positive definite ``M``."""
    try:
        return cho_solve(cho_factor(M, lower=True, check_finite=False), B, check_finite=False)
    except LinAlgError as exc:
        raise NumericError(f"system matrix is not positive definite: {exc}") from exc


def _right_solve(R: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``R @ inv(M)`` for symmetric positive definite ``M``."""
    return _spd_solve(M, R.T).T


def init_state(W0: NetParams, X, Y) -> ADMMState:
    """Forward-pass responses, zero multipliers, shadow equal to V."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if W0.depth < 2:
        raise ValueError("ADMM training needs at least one hidden layer (N >= 2)")
    out, V = forward(W0, X)
    if out.shape != Y.shape:
        raise ValueError(f"network output shape {out.shape} != target shape {Y.shape}")
    return ADMMState(
        W=[W.copy() for W in W0.weights],
        V=[A.copy() for A in V],
        Lam=[np.zeros_like(A) for A in V],
        V_prev=[A.copy() for A in V],
        X=X,
        Y=Y,
        activation=W0.activation,
    )


def lla_coefficients(state: ADMMState, hp: HyperParams) -> LLACoefficients:
    N = state.N
    beta = hp.betas(N)
    act = state.activation
    shifted = [state.V[i] - state.Lam[i] / beta[i] for i in range(N - 1)]
    h = [lipschitz_bound(max_norm(B), act) for B in shifted]
    # mu_j uses layer j+1, i.e. shifted[j] for j = 1..N-2
    mu = [lipschitz_bound(max_norm(shifted[j]), act) for j in range(1, N - 1)]
    return LLACoefficients(h=h, mu=mu)


def update_WN(state: ADMMState, hp: HyperParams) -> np.ndarray:
    N = state.N
    bN = hp.betas(N)[-1]
    A = state.V_at(N - 1)
    R = (bN * state.V[-1] - state.Lam[-1]) @ A.T
    M = hp.lam * np.eye(A.shape[0]) + bN * (A @ A.T)
    return _right_solve(R, M)


def update_Wi(state: ADMMState, hp: HyperParams, i: int, lla: LLACoefficients) -> np.ndarray:
    """Prox-linear update of ``W_i`` (1 <= i <= N-1) around the current iterate."""
    N = state.N
    if not 1 <= i <= N - 1:
        raise IndexError(f"hidden layer index {i} outside 1..{N - 1}")
    b = hp.betas(N)[i - 1]
    W = state.W[i - 1]
    A = state.V_at(i - 1)
    U = W @ A
    act = state.activation
    G = (state.Lam[i - 1] + b * (act(U) - state.V[i - 1])) * act.derivative(U)
    c = 0.5 * b * lla.h[i - 1]
    AAt = A @ A.T
    M = hp.lam * np.eye(A.shape[0]) + c * AAt
    return _right_solve(c * (W @ AAt) - G @ A.T, M)


def update_Vj(state: ADMMState, hp: HyperParams, j: int, lla: LLACoefficients) -> np.ndarray:
    """Prox-linear update of ``V_j`` (1 <= j <= N-2).

    Expects ``state`` to already carry the new weights and the new ``V_{j-1}``.
    """
    N = state.N
    if not 1 <= j <= N - 2:
        raise IndexError(f"layer index {j} outside 1..{N - 2}")
    beta = hp.betas(N)
    bj, bj1 = beta[j - 1], beta[j]
    act = state.activation
    Vj = state.V[j - 1]
    Wn = state.W[j]  # W_{j+1}
    U = Wn @ Vj
    T = (state.Lam[j] + bj1 * (act(U) - state.V[j])) * act.derivative(U)
    c = 0.5 * bj1 * lla.mu[j - 1]
    WtW = Wn.T @ Wn
    rhs = (
        c * (WtW @ Vj)
        + state.Lam[j - 1]
        + bj * act(state.W[j - 1] @ state.V_at(j - 1))
        - Wn.T @ T
    )
    M = bj * np.eye(WtW.shape[0]) + c * WtW
    return _spd_solve(M, rhs)


def update_VN1(state: ADMMState, hp: HyperParams) -> np.ndarray:
    """Exact update of ``V_{N-1}`` given the new ``W_{N-1}, W_N, V_{N-2}``."""
    N = state.N
    beta = hp.betas(N)
    b1, bN = beta[N - 2], beta[N - 1]
    WN = state.W[-1]
    S = state.activation(state.W[N - 2] @ state.V_at(N - 2))
    rhs = state.Lam[N - 2] + b1 * S - WN.T @ (state.Lam[-1] - bN * state.V[-1])
    M = b1 * np.eye(WN.shape[1]) + bN * (WN.T @ WN)
    return _spd_solve(M, rhs)


def update_VN(state: ADMMState, hp: HyperParams) -> np.ndarray:
    """Exact minimizer of the output-layer subproblem.

    Written as ``(Y + Lam_N + beta_N W_N V_{N-1}) / (1 + beta_N)``; once
    ``Lam_N = V_N - Y`` holds (every k >= 1) this is the convex combination
    ``V_N / (1 + beta_N) + beta_N W_N V_{N-1} / (1 + beta_N)``.
    """
    N = state.N
    bN = hp.betas(N)[-1]
    Z = state.W[-1] @ state.V_at(N - 1)
    return (state.Y + state.Lam[-1] + bN * Z) / (1.0 + bN)


def update_multipliers(state: ADMMState, hp: HyperParams) -> List[np.ndarray]:
    N = state.N
    beta = hp.betas(N)
    act = state.activation
    out = []
    for i in range(1, N + 1):
        U = state.W[i - 1] @ state.V_at(i - 1)
        S = act(U) if i < N else U
        out.append(state.Lam[i - 1] + beta[i - 1] * (S - state.V[i - 1]))
    return out


def admm_step(state: ADMMState, hp: HyperParams) -> ADMMState:
    """One full sweep without diagnostics."""
    N = state.N
    lla = lla_coefficients(state, hp)
    W_new = [None] * N
    W_new[-1] = update_WN(state, hp)
    for i in range(N - 1, 0, -1):
        W_new[i - 1] = update_Wi(state, hp, i, lla)

    mid = replace(state, W=W_new, V=list(state.V))
    for j in range(1, N - 1):
        mid.V[j - 1] = update_Vj(mid, hp, j, lla)
    mid.V[N - 2] = update_VN1(mid, hp)
    mid.V[N - 1] = update_VN(mid, hp)

    Lam_new = update_multipliers(mid, hp)
    return replace(mid, Lam=Lam_new, V_prev=list(state.V), k=state.k + 1, lla=lla)


@dataclass
class IterationDiagnostics:
    k: int
    L_value: float
    Lhat_value: float
    kkt_residual: float
    grad_norm_sq: float
    avg_grad_norm_sq: float
    step_W: List[float]
    step_V: List[float]
    step_Lam: List[float]
    flags: Dict[str, bool] = field(default_factory=dict)

    def csv_row(self) -> list:
        return [self.k, self.L_value, self.Lhat_value, self.kkt_residual,
                self.grad_norm_sq, self.avg_grad_norm_sq,
                *self.step_W, *self.step_V, *self.step_Lam]


def trace_columns(N: int) -> List[str]:
    """Column order of the per-iteration trace CSV."""
    cols = ["k", "L", "Lhat", "kkt_residual", "grad_norm_sq", "avg_grad_norm_sq"]
    cols += [f"dW{i}" for i in range(1, N + 1)]
    cols += [f"dV{i}" for i in range(1, N + 1)]
    cols += [f"dLam{i}" for i in range(1, N + 1)]
    return cols


def diagnose(new: ADMMState, old: ADMMState, hp: HyperParams, tc=None, grad_sum: float = 0.0) -> IterationDiagnostics:
    lay = _Layers(new)
    L = augmented_lagrangian(new, hp, layers=lay)
    Lhat = lyapunov(new, hp, tc, layers=lay) if tc is not None else float("nan")
    g = grad_augmented_lagrangian(new, hp, layers=lay).norm_sq()
    kkt = kkt_residual(new, hp, layers=lay)
    k = new.k
    return IterationDiagnostics(
        k=k,
        L_value=L,
        Lhat_value=Lhat,
        kkt_residual=kkt,
        grad_norm_sq=g,
        avg_grad_norm_sq=(grad_sum + g) / max(k, 1),
        step_W=[np.sqrt(_sq(a - b)) for a, b in zip(new.W, old.W)],
        step_V=[np.sqrt(_sq(a - b)) for a, b in zip(new.V, old.V)],
        step_Lam=[np.sqrt(_sq(a - b)) for a, b in zip(new.Lam, old.Lam)],
    )


def iterate(state: ADMMState, hp: HyperParams, tc=None, grad_sum: float = 0.0) -> Tuple[ADMMState, IterationDiagnostics]:
    new = admm_step(state, hp)
    return new, diagnose(new, state, hp, tc, grad_sum)


@dataclass
class Trace:
    rows: List[IterationDiagnostics] = field(default_factory=list)
    final_state: Optional[ADMMState] = None
    aborted: bool = False
    abort_reason: str = ""

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path) -> None:
        N = self.final_state.N if self.final_state is not None else len(self.rows[0].step_W)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(trace_columns(N))
            for r in self.rows:
                w.writerow([repr(float(x)) if not isinstance(x, int) else x for x in r.csv_row()])


def train(
    net0: NetParams,
    X,
    Y,
    hp: HyperParams,
    tc=None,
    diagnostics: bool = True,
    callback: Optional[Callable[[ADMMState, Optional[IterationDiagnostics]], None]] = None,
) -> Tuple[NetParams, Trace]:
    """Run the ADMM sweep for ``hp.epochs`` iterations or until the KKT tolerance.

    In theory mode the hyperparameters must pass :func:`validate_params` and
    every iterate is checked against the boundedness bounds. A non-finite
    iterate stops the run and the last finite state is returned.
    """
    from .theory import check_runtime_invariants, theory_constants, validate_params

    state = init_state(net0, X, Y)
    if hp.mode == "theory" or (diagnostics and tc is None):
        tc = tc or theory_constants(net0, X, Y, hp)
    if hp.mode == "theory":
        report = validate_params(hp, tc)
        if not report.passed:
            raise ValueError(f"theory-mode parameters rejected: {report.failures()}")

    trace = Trace(final_state=state)
    grad_sum = 0.0
    for _ in range(hp.epochs):
        new = admm_step(state, hp)
        if not new.is_finite():
            trace.aborted = True
            trace.abort_reason = f"non-finite iterate at k={new.k}"
            log.warning(trace.abort_reason)
            break
        diag = None
        if diagnostics or hp.kkt_tol > 0:
            diag = diagnose(new, state, hp, tc, grad_sum)
            grad_sum += diag.grad_norm_sq
            if hp.mode == "theory":
                diag.flags = check_runtime_invariants(new, tc, hp, prev=state)
            trace.rows.append(diag)
        state = new
        trace.final_state = state
        if callback is not None:
            callback(state, diag)
        if hp.kkt_tol > 0 and diag.kkt_residual <= hp.kkt_tol:
            break
    return NetParams([W.copy() for W in state.W], state.activation), trace
