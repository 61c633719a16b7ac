"""Sigmoid-net approximants of the identity, the step function, products and ReLU."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from .net import sigmoid

GATE_GRID = 201
GATE_SEEDS = 10


def h_linear(t, mu: float):
    """``(4/mu) sigma(mu t) - (4/mu) sigma(0)``; within ``2 M^2 mu`` of ``t`` on ``[-M, M]``."""
    if not 0 < mu < 0.5:
        raise ValueError(f"mu must lie in (0, 1/2), got {mu}")
    return 4.0 / mu * (sigmoid(mu * np.asarray(t, dtype=float)) - 0.5)


def step_gain(eps: float, tau: float) -> float:
    if not (0 < eps < 1 and tau > 0):
        raise ValueError(f"need 0 < eps < 1 and tau > 0, got eps={eps}, tau={tau}")
    return np.log(1.0 / eps) / tau


def step_approx(t, eps: float, tau: float):
    """``sigma(A t)`` with ``A = log(1/eps)/tau``; within ``eps`` of the step for ``|t| >= tau``."""
    return sigmoid(step_gain(eps, tau) * np.asarray(t, dtype=float))


def lp_error(f: Callable, g: Callable, p: float = 1.0, interval=(-1.0, 1.0), grid_size: int = 10_000) -> float:
    """Composite-trapezoid ``L^p`` norm of ``f - g`` on ``interval``."""
    if p < 1 or grid_size < 2:
        raise ValueError("need p >= 1 and grid_size >= 2")
    t = np.linspace(interval[0], interval[1], grid_size)
    d = np.abs(np.asarray(f(t), dtype=float) - np.asarray(g(t), dtype=float))
    if np.isinf(p):
        return float(d.max())
    return float(np.trapezoid(d**p, t) ** (1.0 / p))


@dataclass
class SigmoidNetExpr:
    """Feedforward expression ``affine -> sigmoid -> ... -> affine``.

    ``layers`` holds ``(W, b)`` pairs; every layer but the last is followed
    by a sigmoid. ``params`` names the free parameters the weights are
    built from, so tied entries are counted once.
    """

    layers: List[Tuple[np.ndarray, np.ndarray]]
    params: Dict[str, float]
    kind: str = ""
    info: Dict[str, float] = field(default_factory=dict)

    @property
    def hidden_layers(self) -> int:
        return len(self.layers) - 1

    @property
    def num_params(self) -> int:
        return len(self.params)

    @property
    def max_param(self) -> float:
        return max(abs(v) for v in self.params.values())

    def __call__(self, x):
        """Evaluate on scalars, vectors (one input dim) or ``d x n`` matrices."""
        arr = np.asarray(x, dtype=float)
        d_in = self.layers[0][0].shape[1]
        scalar = arr.ndim == 0
        Z = arr.reshape(1, -1) if (arr.ndim <= 1 and d_in == 1) else arr.reshape(d_in, -1)
        for k, (W, b) in enumerate(self.layers):
            Z = W @ Z + b[:, None]
            if k < len(self.layers) - 1:
                Z = sigmoid(Z)
        out = Z[0]
        if scalar:
            return float(out[0])
        return out.reshape(arr.shape[1:] if d_in > 1 else arr.shape)

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "params": self.params,
            "info": self.info,
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.layers],
        })

    @classmethod
    def from_json(cls, text: str) -> "SigmoidNetExpr":
        d = json.loads(text)
        layers = [(np.array(l["W"], dtype=float).reshape(len(l["b"]), -1), np.array(l["b"], dtype=float))
                  for l in d["layers"]]
        return cls(layers, d["params"], d.get("kind", ""), d.get("info", {}))


# ---- product gate ----

_GATE_NAMES = ("b1", "p1", "q1", "c1", "b2", "p2", "q2", "c2", "d")


def _gate_layers(theta, in_scale=(1.0, 1.0), in_shift=(0.0, 0.0)):
    """Eight tied sigmoid units; ``in_*`` fold an input affine map into the first layer."""
    rows, biases, out = [], [], []
    for g in range(2):
        b, p, q, c = theta[4 * g: 4 * g + 4]
        for sp, sq, sgn in ((1, 1, 1), (-1, -1, 1), (1, -1, -1), (-1, 1, -1)):
            w = np.array([sp * p * in_scale[0], sq * q * in_scale[1]])
            rows.append(w)
            biases.append(b + sp * p * in_shift[0] + sq * q * in_shift[1])
            out.append(sgn * c)
    W1 = np.array(rows)
    return (W1, np.array(biases)), (np.array([out]), np.array([theta[8]]))


def _gate_eval(theta, T, S):
    (W1, b1), (W2, b2) = _gate_layers(theta)
    Z = sigmoid(W1 @ np.stack([T, S]) + b1[:, None])
    return (W2 @ Z + b2[:, None])[0]


class FitFailure(RuntimeError):
    def __init__(self, achieved: float, target: float):
        super().__init__(f"product gate reached sup-error {achieved:.3g}, target {target:.3g}")
        self.achieved = achieved
        self.target = target


def _grid(M: float, m: int):
    g = np.linspace(-M, M, m)
    T, S = np.meshgrid(g, g, indexing="ij")
    return T.ravel(), S.ravel()


def fit_product_gate(M: float, nu: float, seed: int = 0, attempts: int = GATE_SEEDS) -> SigmoidNetExpr:
    """Least-squares fit of a 9-parameter shallow sigmoid net to ``(t, s) -> t s`` on ``[-M, M]^2``.

    The best of ``attempts`` seeded starts is certified on a
    ``201 x 201`` grid; :class:`FitFailure` is raised when its sup-error
    exceeds ``nu``.
    """
    if M < 1 or not 0 < nu < 1:
        raise ValueError(f"need M >= 1 and 0 < nu < 1, got M={M}, nu={nu}")
    Tf, Sf = _grid(M, 41)
    Tc, Sc = _grid(M, GATE_GRID)
    rng = np.random.default_rng(seed)
    best, best_err = None, np.inf
    for k in range(attempts):
        # start near a second-difference product formula, jittered per attempt
        s = (0.3 + 0.2 * rng.random()) / M
        a = rng.uniform(-1.5, 1.5)
        sg = sigmoid(a)
        d2 = sg * (1 - sg) * (1 - 2 * sg)
        if abs(d2) < 1e-3:
            a, sg = a + 1.0, sigmoid(a + 1.0)
            d2 = sg * (1 - sg) * (1 - 2 * sg)
        c = 1.0 / (4 * d2 * s * s)
        theta0 = np.array([a, s, s, c, a + 0.5, s, s, 0.0, 0.0]) + (0.0 if k == 0 else 0.05) * rng.normal(size=9)
        res = least_squares(lambda th: _gate_eval(th, Tf, Sf) - Tf * Sf, theta0, method="lm",
                            max_nfev=4000, xtol=1e-15, ftol=1e-15)
        err = float(np.max(np.abs(_gate_eval(res.x, Tc, Sc) - Tc * Sc)))
        if err < best_err:
            best, best_err = res.x, err
    if not best_err <= nu:
        raise FitFailure(best_err, nu)
    return SigmoidNetExpr(list(_gate_layers(best)), dict(zip(_GATE_NAMES, map(float, best))),
                          kind="product_gate", info={"M": M, "nu": nu, "sup_error": best_err})


def relu_approx(eps: float, M: float = 1.0, seed: int = 0, gate: Optional[SigmoidNetExpr] = None) -> SigmoidNetExpr:
    """Two-hidden-layer sigmoid approximant of ``max(t, 0)`` on ``[-M, M]``.

    Composes the product gate with ``sigma(A t)`` and ``h_linear(t)``, using
    ``mu = nu = eps``, ``tau = eps**7`` and ``A = log(1/eps)/tau``. The
    ``h_linear`` affine part is folded into the gate's first layer.
    """
    if not 0 < eps < 0.5 or not M > 0:
        raise ValueError(f"need 0 < eps < 1/2 and M > 0, got eps={eps}, M={M}")
    mu = eps
    tau = eps**7
    A = step_gain(eps, tau)
    if gate is None:
        gate = fit_product_gate(max(1.0, M), eps, seed)
    theta = [gate.params[k] for k in _GATE_NAMES]
    first = (np.array([[A], [mu]]), np.zeros(2))
    # gate inputs: sigma(A t) as is, h_linear = (4/mu) * (sigma(mu t) - 1/2)
    (W1, b1), (W2, b2) = _gate_layers(theta, in_scale=(1.0, 4.0 / mu), in_shift=(0.0, -2.0 / mu))
    params = {"A": float(A), "mu": float(mu), **{f"gate_{k}": v for k, v in gate.params.items()}}
    expr = SigmoidNetExpr([first, (W1, b1), (W2, b2)], params, kind="relu_approx",
                          info={"eps": eps, "M": M, "tau": tau, "gate_sup_error": gate.info.get("sup_error", np.nan)})
    expr.info["L1_error"] = lp_error(expr, lambda t: np.maximum(t, 0.0), 1.0, (-M, M))
    return expr
