"""Weight initialization schemes with a multiplicative spread factor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .net import SIGMOID, Activation, NetParams, check_dims

KINDS = ("lecun_unif", "lecun_gauss", "orth_unif", "orth_gauss", "xavier", "msra")


@dataclass(frozen=True)
class InitScheme:
    """Scheme name plus a factor applied to its standard deviation or bound."""

    kind: str = "msra"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown init scheme {self.kind!r}; choose from {KINDS}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def parse(cls, text: str) -> "InitScheme":
        """Parse ``"kind"`` or ``"kind:scale"``, e.g. ``"msra:8"``."""
        kind, _, scale = text.strip().partition(":")
        return cls(kind.strip(), float(scale) if scale else 1.0)

    def __str__(self) -> str:
        return f"{self.kind}:{self.scale:g}"


def _orthonormal(rng: np.random.Generator, rows: int, cols: int, gaussian: bool) -> np.ndarray:
    if gaussian:
        A = rng.standard_normal((rows, cols))
    else:
        A = rng.uniform(-1.0, 1.0, (rows, cols))
    tall = rows >= cols
    Q, R = np.linalg.qr(A if tall else A.T)
    # sign fix makes the factorization unique
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q if tall else Q.T


def _layer(rng, kind: str, d_in: int, d_out: int, last: bool) -> np.ndarray:
    shape = (d_out, d_in)
    if kind == "lecun_unif":
        b = np.sqrt(3.0 / d_in)
        return rng.uniform(-b, b, shape)
    if kind == "lecun_gauss":
        return rng.normal(0.0, np.sqrt(1.0 / d_in), shape)
    if kind == "xavier":
        b = np.sqrt(6.0 / (d_in + d_out))
        return rng.uniform(-b, b, shape)
    if kind == "msra":
        return rng.normal(0.0, np.sqrt((1.0 if last else 2.0) / d_out), shape)
    return _orthonormal(rng, d_out, d_in, gaussian=(kind == "orth_gauss"))


def init_weights(
    dims: Sequence[int],
    scheme: InitScheme | str = InitScheme(),
    seed: int | None = 0,
    act: Activation = SIGMOID,
) -> NetParams:
    """Draw weights for widths ``dims = [d_0, ..., d_N]``.

    MSRA uses variance ``2/d_l`` on hidden layers and ``1/d_N`` on the last
    layer, fan-out based. Orthogonal schemes give orthonormal columns for
    tall matrices and orthonormal rows otherwise.
    """
    dims = check_dims(dims)
    if isinstance(scheme, str):
        scheme = InitScheme.parse(scheme)
    rng = np.random.default_rng(seed)
    N = len(dims) - 1
    Ws = [scheme.scale * _layer(rng, scheme.kind, dims[l - 1], dims[l], l == N) for l in range(1, N + 1)]
    return NetParams(Ws, act)


def normalized_init(
    dims: Sequence[int],
    seed: int | None = 0,
    scheme: InitScheme | str = InitScheme("lecun_gauss"),
    act: Activation = SIGMOID,
) -> NetParams:
    """Draw with ``scheme`` then rescale every layer to unit Frobenius norm."""
    dims = check_dims(dims)
    if isinstance(scheme, str):
        scheme = InitScheme.parse(scheme)
    rng = np.random.default_rng(seed)
    out = []
    N = len(dims) - 1
    for l in range(1, N + 1):
        W = _layer(rng, scheme.kind, dims[l - 1], dims[l], l == N)
        while not np.linalg.norm(W) > 0:
            W = _layer(rng, scheme.kind, dims[l - 1], dims[l], l == N)
        out.append(W / np.linalg.norm(W))
    return NetParams(out, act)
