"""Convergence constants, parameter validation and run-time bound checks.

Everything here follows the generic (non-normalized) convergence conditions:
penalty chain, regularization floor, width floor and initialization bounds,
together with the Lyapunov weights ``xi`` and the descent margin ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..net import Activation, NetParams, forward
from .state import ADMMState, HyperParams

# relative slack on ">=" comparisons; equality is admissible but must survive rounding
RTOL = 1e-9


@dataclass
class TheoryConstants:
    L0: float
    L1: float
    L2: float
    L3: float
    gamma: float
    d_min: int
    n: int
    N: int
    f_min: float
    alpha3: float
    C3: float
    lam_tilde: Dict[int, float]
    lam_bar: float
    lam_hat: float
    xi: List[float]
    zeta: List[float]
    eta: List[float]
    a: float
    X_norm: float
    Y_norm: float
    init_V_norms: List[float] = field(default_factory=list)
    init_Lam_norms: List[float] = field(default_factory=list)


def _sum_j(upper: int, term) -> float:
    return float(sum(term(j) for j in range(1, upper + 1)))


def theory_constants(W0: NetParams, X, Y, hp: HyperParams, act: Optional[Activation] = None) -> TheoryConstants:
    """Constants of the convergence conditions for this initialization and data.

    With ``beta_N <= 3`` the constant ``C3`` is infinite and so are the
    quantities built from it; no error is raised.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _theory_constants(W0, X, Y, hp, act)


def _theory_constants(W0, X, Y, hp, act):
    act = act or W0.activation
    L0, L1, L2 = act.bounds
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    N = W0.depth
    n = X.shape[1]
    dims = W0.dims  # d_0..d_N
    beta = hp.betas(N)
    lam = hp.lam
    bN = beta[-1]

    def b(i):  # 1-based penalty
        return beta[i - 1]

    def d(i):
        return dims[i]

    L3 = 2.0 * (L1**2 + L2 * L0 + L2)
    gamma = max(float(np.linalg.norm(W)) for W in W0.weights)
    d_min = min(dims[1:N]) if N >= 2 else dims[-1]
    f_min = np.sqrt(6.0) * (np.sqrt(3 * L1) + 2 * np.sqrt(L0 * L3) * (n * d_min) ** 0.25)
    alpha3 = (f_min / L1) ** 2
    Xn, Yn = float(np.linalg.norm(X)), float(np.linalg.norm(Y))

    c_width = max(2 * L0 * np.sqrt(n * d(j + 1)) / gamma**j for j in range(0, N - 1))
    c_target = Yn / ((bN - 3.0) * gamma ** (N - 1)) if bN > 3.0 else np.inf
    C3 = max(c_width, c_target)

    lam_tilde = {}
    for i in range(2, N):
        s = 4 * C3 * gamma ** (i - 1) + L0 * np.sqrt(n * d(i))
        lam_tilde[i] = (3 * L1 * C3 * b(i) * gamma ** (i - 3) * s
                        * (1 + np.sqrt(6 * L3 * C3**2 * gamma ** (2 * i - 2) / (L1 * s))))
    lam_bar = 0.0
    for i in range(2, N):
        other = (1 / 6) * (1 + 3 * L2 * L3 * gamma ** (i - 1) / L1) ** 2 * C3**2 * gamma ** (2 * (i - 2)) * b(i)
        lam_bar = max(lam_bar, lam_tilde[i], other)
    s1 = 4 * C3 + L0 * np.sqrt(n * d(1))
    lam_hat = L1 * b(1) * Xn * s1 / gamma * (1 + np.sqrt(2 * L3 * C3 * Xn * gamma / (L1 * s1)))

    Lg = L1 * gamma
    zeta = [0.0] * (N + 1)
    eta = [0.0] * (N + 1)
    xi = [0.0] * (N + 1)

    zeta[N] = (lam / 2 - 3 * C3**2 * bN**2 * gamma ** (2 * (N - 1)) / b(N - 1)
               - 2 * C3**2 * bN**2 * gamma ** (2 * (N - 2)) / L1**2
               * _sum_j(N - 2, lambda j: (N - j) * Lg ** (2 * (N - j)) / b(j)))
    for i in range(2, N):
        zeta[i] = (lam / 2 - 2 * (1 + 3 * L2 * L3 * gamma ** (i - 1) / L1) ** 2 * C3**2 * b(i) ** 2
                   * gamma ** (2 * (i - 2)) * _sum_j(i - 1, lambda j: (N - j) * Lg ** (2 * (i - j)) / b(j)))
    zeta[1] = lam / 2

    sN = _sum_j(N - 2, lambda j: (N - j + 1) * Lg ** (2 * (N - j)) / b(j))
    eta[N] = (1 + bN) / 2 - 1 / bN - 3 * gamma**2 * (1 + bN) ** 2 / b(N - 1) - 4 * (1 + bN) ** 2 / L1**2 * sN
    xi[N] = 3 * gamma**2 * bN**2 / b(N - 1) + 4 * bN**2 / L1**2 * sN

    sN1 = _sum_j(N - 2, lambda j: (N - j + 1) * Lg ** (2 * (N - 1 - j)) / b(j))
    eta[N - 1] = b(N - 1) / 2 - 4 * b(N - 1) ** 2 * sN1
    xi[N - 1] = 4 * b(N - 1) ** 2 * sN1

    for i in range(2, N - 1):
        a1 = L1**2 + 2 * L3 * C3 * gamma**i
        a2 = a1 + L2 * C3 * gamma**i
        si = _sum_j(i - 1, lambda j: (N - j + 1) * Lg ** (2 * (i - j)) / b(j))
        eta[i] = (b(i) / 2 - 4 * (b(i) + a1 * gamma**2 * b(i + 1)) ** 2 * si
                  - 4 * a1**2 * gamma**4 * b(i + 1) ** 2 / b(i) * (N - i + 1))
        xi[i] = (4 * (b(i) + a2 * gamma**2 * b(i + 1)) ** 2 * si
                 + 4 * a2**2 * gamma**4 * b(i + 1) ** 2 / b(i) * (N - i + 1))

    if N >= 3:
        # for N = 2 layer 1 is the penultimate layer and keeps the formulas above
        a1 = L1**2 + 2 * L3 * C3 * gamma
        a2 = a1 + L2 * C3 * gamma
        eta[1] = b(1) / 2 - 4 * a1**2 * gamma**4 * b(2) ** 2 / b(1) * N
        xi[1] = 4 * a2**2 * gamma**4 * b(2) ** 2 / b(1) * N

    # np.min propagates NaN, builtin min does not
    margin = np.min(np.concatenate([zeta[1:], [eta[i] - xi[i] for i in range(1, N + 1)]]))

    _, V0 = forward(W0, X)
    return TheoryConstants(
        L0=L0, L1=L1, L2=L2, L3=L3, gamma=gamma, d_min=int(d_min), n=n, N=N,
        f_min=float(f_min), alpha3=float(alpha3), C3=float(C3),
        lam_tilde={k: float(v) for k, v in lam_tilde.items()},
        lam_bar=float(lam_bar), lam_hat=float(lam_hat),
        xi=[float(v) for v in xi[1:]], zeta=[float(v) for v in zeta[1:]],
        eta=[float(v) for v in eta[1:]], a=float(margin),
        X_norm=Xn, Y_norm=Yn,
        init_V_norms=[float(np.linalg.norm(A)) for A in V0],
        init_Lam_norms=[0.0] * N,
    )


def _ratio_floor(tc: TheoryConstants, i: int) -> float:
    """Lower bound on ``beta_i / beta_{i+1}`` for 1 <= i <= N-2."""
    g = tc.gamma
    first = 6 * np.sqrt(tc.N) * (2 * tc.L1**2 + (4 * tc.L3 + tc.L2) * tc.C3 * g**i) * g**2
    second = 6 * (np.sqrt(3 * tc.L1) + np.sqrt(2 * tc.L3 * tc.C3 * g**i)) ** 2 * g**2
    return float(max(first, second))


def lambda_floor(tc: TheoryConstants, beta_N: float) -> float:
    return float(max(12 * beta_N * tc.C3**2 * tc.gamma ** (2 * tc.N - 4), tc.lam_bar, tc.lam_hat))


def width_floor(tc: TheoryConstants) -> float:
    L0, L1, L3 = tc.L0, tc.L1, tc.L3
    top = max(np.sqrt(24 * tc.N + 1) * L1 - np.sqrt(18 * L1), 0.0)
    return float(top**4 / (tc.n * (24 * L0 * L3) ** 2))


@dataclass
class Condition:
    name: str
    passed: bool
    value: float
    bound: float


@dataclass
class ValidationReport:
    conditions: List[Condition]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failures(self) -> List[str]:
        return [f"{c.name}: {c.value:.6g} vs {c.bound:.6g}" for c in self.conditions if not c.passed]

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def _ge(name, value, bound) -> Condition:
    return Condition(name, bool(value >= bound * (1 - RTOL)), float(value), float(bound))


def _le(name, value, bound) -> Condition:
    return Condition(name, bool(value <= bound * (1 + RTOL)), float(value), float(bound))


def validate_params(hp: HyperParams, tc: TheoryConstants) -> ValidationReport:
    """Check every convergence condition; never raises."""
    N = tc.N
    beta = hp.betas(N)
    g = tc.gamma
    conds = [
        _ge("beta_N", beta[-1], 3.5),
        _ge("beta_N-1/beta_N", beta[-2] / beta[-1], 16 * g**2),
    ]
    for i in range(1, N - 1):
        conds.append(_ge(f"beta_{i}/beta_{i + 1}", beta[i - 1] / beta[i], _ratio_floor(tc, i)))
    conds.append(_ge("lambda", hp.lam, lambda_floor(tc, beta[-1])))
    conds.append(_ge("d_min", tc.d_min, width_floor(tc)))
    for i in range(1, N + 1):
        conds.append(_le(f"init_V_{i}", tc.init_V_norms[i - 1], 3 * tc.C3 * g ** (i - 1)))
        conds.append(_le(f"init_Lam_{i}", tc.init_Lam_norms[i - 1], tc.C3 * beta[i - 1] * g ** (i - 1)))
    conds.append(Condition("descent_margin", bool(tc.a > 0), tc.a, 0.0))
    return ValidationReport(conds)


def theory_params(
    W0: NetParams,
    X,
    Y,
    beta: Optional[Sequence[float]] = None,
    slack: float = 1.01,
    epochs: int = 2000,
) -> HyperParams:
    """Smallest penalties and regularization meeting the conditions, times ``slack``.

    With ``beta`` given only ``lambda`` is derived.
    """
    N = W0.depth
    if beta is None:
        b = np.empty(N)
        b[-1] = 3.5 * slack
        b[:] = b[-1]
        tc = theory_constants(W0, X, Y, HyperParams(lam=1.0, beta=list(b)))
        gamma = tc.gamma
        b[-2] = 16 * gamma**2 * b[-1] * slack
        for i in range(N - 2, 0, -1):
            b[i - 1] = b[i] * _ratio_floor(tc, i) * slack
        beta = list(b)
    probe = HyperParams(lam=1.0, beta=list(beta))
    tc = theory_constants(W0, X, Y, probe)
    lam = lambda_floor(tc, float(beta[-1])) * slack
    return HyperParams(lam=lam, beta=list(beta), mode="theory", epochs=epochs)


def check_runtime_invariants(
    state: ADMMState,
    tc: TheoryConstants,
    hp: HyperParams,
    prev: Optional[ADMMState] = None,
    tol: float = 1e-10,
) -> Dict[str, bool]:
    """Boundedness and dual-step bounds along a theory-mode run.

    ``prev`` is the iterate at k-1 (its ``V_prev`` supplies ``V^{k-2}``).
    The dual-step checks need k >= 2 and are skipped otherwise. A ``False``
    flag names the violated bound; nothing is raised.
    """
    N = state.N
    beta = hp.betas(N)
    g, C3, L1, L2 = tc.gamma, tc.C3, tc.L1, tc.L2
    nrm = np.linalg.norm
    flags: Dict[str, bool] = {}
    for i in range(1, N + 1):
        flags[f"W_{i}_bounded"] = bool(nrm(state.W[i - 1]) <= g * (1 + tol))
        flags[f"V_{i}_bounded"] = bool(nrm(state.V[i - 1]) <= 3 * C3 * g ** (i - 1) * (1 + tol))
        flags[f"Lam_{i}_bounded"] = bool(nrm(state.Lam[i - 1]) <= C3 * beta[i - 1] * g ** (i - 1) * (1 + tol))

    if state.k < 2 or prev is None or prev.k != state.k - 1:
        return flags

    dLam = [nrm(a - b) for a, b in zip(state.Lam, prev.Lam)]
    dV = [nrm(a - b) for a, b in zip(state.V, prev.V)]
    dV_old = [nrm(a - b) for a, b in zip(prev.V, prev.V_prev)]
    dW = [nrm(a - b) for a, b in zip(state.W, prev.W)]
    scale = max(1.0, dV[-1])
    flags["dual_N"] = bool(abs(dLam[-1] - dV[-1]) <= tol * scale)

    WN, WN_old = nrm(state.W[-1]), nrm(prev.W[-1])
    bound = (WN * dLam[-1] + nrm(prev.Lam[-1]) * dW[-1]
             + beta[-1] * WN * dV[-1] + beta[-1] * WN_old * dV_old[-1])
    flags["dual_N-1"] = bool(dLam[N - 2] <= bound * (1 + tol) + tol)

    mu_k = state.lla.mu if state.lla is not None else []
    mu_km1 = prev.lla.mu if prev.lla is not None else None
    for j in range(1, N - 1):
        if mu_km1 is None:
            break
        Wk, Wk1 = nrm(state.W[j]), nrm(prev.W[j])
        Lk1 = nrm(prev.Lam[j])
        bj1 = beta[j]
        bound = (L1 * Wk * dLam[j]
                 + (L1 * Lk1 + L2 * Wk1 * Lk1 * nrm(prev.V[j - 1])) * dW[j]
                 + L1 * bj1 * (Wk * dV[j] + Wk1 * dV_old[j])
                 + (L1**2 + mu_k[j - 1] / 2) * bj1 * Wk**2 * dV[j - 1]
                 + ((L1**2 + mu_km1[j - 1] / 2) * bj1 + L2 * Lk1) * Wk1**2 * dV_old[j - 1])
        flags[f"dual_{j}"] = bool(dLam[j - 1] <= bound * (1 + tol) + tol)
    return flags
