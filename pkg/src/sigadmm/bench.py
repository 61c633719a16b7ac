"""Synthetic targets, datasets, metrics and delimited-text ingestion."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

TARGETS = ("square", "product", "l1_radial", "l2_radial_wendland")

# l1-radial box [r, (1 + eps) r]^2
L1_R = 0.75
L1_EPS = 0.5


class OutsideDomainWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TargetFunction:
    kind: str

    def __post_init__(self):
        if self.kind not in TARGETS:
            raise ValueError(f"unknown target {self.kind!r}; choose from {TARGETS}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "square" else 2

    @property
    def domain(self) -> List[Tuple[float, float]]:
        if self.kind == "l1_radial":
            return [(L1_R, (1 + L1_EPS) * L1_R)] * 2
        return [(-1.0, 1.0)] * self.dim

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo = np.array([a for a, _ in self.domain])[:, None]
        hi = np.array([b for _, b in self.domain])[:, None]
        return np.all((X >= lo) & (X <= hi), axis=0)


def wendland(t):
    """``(1 - t)_+^5 (8 t^2 + 5 t + 1)``."""
    t = np.asarray(t, dtype=float)
    return np.maximum(1.0 - t, 0.0) ** 5 * (8 * t**2 + 5 * t + 1)


def eval_target(f: TargetFunction | str, x) -> np.ndarray | float:
    """Target value at a point (vector) or at every column of a ``dim x n`` matrix.

    Points outside the domain are evaluated anyway and reported by an
    :class:`OutsideDomainWarning`.
    """
    if isinstance(f, str):
        f = TargetFunction(f)
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    X = arr.reshape(-1, 1) if single else arr
    if X.shape[0] != f.dim:
        raise ValueError(f"{f.kind} takes {f.dim}-dimensional inputs, got {X.shape[0]}")
    if not np.all(f.contains(X)):
        warnings.warn(f"{f.kind} evaluated outside its domain", OutsideDomainWarning, stacklevel=2)
    if f.kind == "square":
        y = X[0] ** 2
    elif f.kind == "product":
        y = X[0] * X[1]
    elif f.kind == "l1_radial":
        y = np.maximum(np.abs(X).sum(axis=0) - 1.0, 0.0)
    else:
        y = wendland(np.linalg.norm(X, axis=0))
    return float(y[0]) if single else y


@dataclass
class ZScoreRecord:
    """Per-feature statistics; constant features are only centered."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        scale = np.where(self.constant, 1.0, self.std)
        return (X - self.mean[:, None]) / scale[:, None]


def zscore(X) -> Tuple[np.ndarray, ZScoreRecord]:
    """Standardize each row (feature) of ``X`` with the population std."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=1)
    std = X.std(axis=1)
    constant = ~(std > 0)
    if np.any(constant):
        warnings.warn(f"constant features {np.flatnonzero(constant).tolist()} only centered", stacklevel=2)
    rec = ZScoreRecord(mean, std, constant)
    return rec.apply(X), rec


@dataclass
class Dataset:
    X_train: np.ndarray
    Y_train: np.ndarray
    X_test: np.ndarray
    Y_test: np.ndarray
    noise_std: float = 0.0
    target: Optional[str] = None
    task: str = "regression"
    norm: Optional[ZScoreRecord] = None
    meta: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("X_train", "Y_train", "X_test", "Y_test"):
            A = np.asarray(getattr(self, name), dtype=float)
            if A.ndim != 2:
                raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
            if not np.all(np.isfinite(A)):
                raise ValueError(f"{name} has non-finite entries")
            setattr(self, name, A)
        if self.X_train.shape[1] != self.Y_train.shape[1] or self.X_test.shape[1] != self.Y_test.shape[1]:
            raise ValueError("inputs and labels disagree on the number of samples")
        self.meta.setdefault("n_train", self.X_train.shape[1])
        self.meta.setdefault("n_test", self.X_test.shape[1])

    @property
    def n_train(self) -> int:
        return self.X_train.shape[1]

    @property
    def n_test(self) -> int:
        return self.X_test.shape[1]


def eval_grid(f: TargetFunction, n_points: int) -> np.ndarray:
    """Uniform tensor grid over the domain with about ``n_points`` nodes."""
    per_axis = max(2, int(round(n_points ** (1.0 / f.dim))))
    axes = [np.linspace(a, b, per_axis) for a, b in f.domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh])


def make_dataset(
    f: TargetFunction | str,
    n_train: int,
    n_test: int,
    noise_std: float = 0.0,
    seed: int | None = 0,
    bias_row: bool = False,
) -> Dataset:
    """Uniform random training inputs with noisy labels; noiseless grid for testing.

    ``bias_row`` appends a constant-1 feature so the first layer can carry
    thresholds without bias vectors in the model.
    """
    if isinstance(f, str):
        f = TargetFunction(f)
    if n_train < 1 or n_test < 1:
        raise ValueError("dataset sizes must be at least 1")
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, _ in f.domain])[:, None]
    hi = np.array([b for _, b in f.domain])[:, None]
    X = lo + (hi - lo) * rng.random((f.dim, n_train))
    Y = eval_target(f, X)[None, :]
    if noise_std > 0:
        Y = Y + rng.normal(0.0, noise_std, Y.shape)
    Xt = eval_grid(f, n_test)
    Yt = eval_target(f, Xt)[None, :]
    if bias_row:
        X, Xt = append_bias_row(X), append_bias_row(Xt)
    return Dataset(X, Y, Xt, Yt, noise_std=noise_std, target=f.kind, meta={"bias_row": int(bias_row)})


def append_bias_row(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.vstack([X, np.ones((1, X.shape[1]))])


def metrics(pred, truth, task: str = "regression") -> Dict[str, float]:
    """MSE for regression; accuracy at the 0.5 threshold (labels in {0, 1}) for binary."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    out = {"mse": float(np.mean((pred - truth) ** 2))}
    if task == "binary":
        out["accuracy"] = float(np.mean((pred >= 0.5) == (truth >= 0.5)))
    elif task != "regression":
        raise ValueError(f"unknown task {task!r}")
    return out


# ---- delimited text ----

MISSING = {"", "na", "nan", "?", "null"}


class TabularParseError(ValueError):
    pass


@dataclass(frozen=True)
class BinarizeRule:
    """Labels in ``positive`` (inclusive range) map to 1, other labels in ``valid`` to 0."""

    positive: Tuple[float, float] = (1, 4)
    valid: Tuple[float, float] = (1, 12)

    @classmethod
    def parse(cls, text: str) -> "BinarizeRule":
        """``"1-4"`` or ``"1-4/1-12"`` (positive range / valid range)."""
        def rng(s):
            a, _, b = s.strip().partition("-")
            return (float(a), float(b or a))

        pos, _, valid = text.partition("/")
        return cls(rng(pos), rng(valid)) if valid else cls(rng(pos))

    def __call__(self, y: float) -> float:
        if not self.valid[0] <= y <= self.valid[1]:
            raise ValueError(f"label {y:g} outside {self.valid}")
        return 1.0 if self.positive[0] <= y <= self.positive[1] else 0.0


def load_tabular(
    path,
    label_column: str,
    binarize_rule: BinarizeRule | str | None = BinarizeRule(),
    test_fraction: float = 0.0,
    seed: int | None = 0,
    standardize: bool = True,
) -> Dataset:
    """Read a comma-separated file with a header row.

    Rows with a missing label are dropped and counted in ``meta``. With
    ``test_fraction > 0`` a seeded random split is made and z-scoring uses
    training statistics only.
    """
    if isinstance(binarize_rule, str):
        binarize_rule = BinarizeRule.parse(binarize_rule)
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TabularParseError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise TabularParseError(f"{path}: no column {label_column!r} in header {header}")
        li = header.index(label_column)
        feats, labels, dropped, read = [], [], 0, 0
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            read += 1
            line = reader.line_num
            if len(row) != len(header):
                raise TabularParseError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            lab = row[li].strip()
            if lab.lower() in MISSING:
                dropped += 1
                continue
            try:
                y = float(lab)
                x = [float(c) for j, c in enumerate(row) if j != li]
            except ValueError as exc:
                raise TabularParseError(f"{path}:{line}: {exc}") from None
            if not all(math.isfinite(v) for v in x):
                raise TabularParseError(f"{path}:{line}: non-finite feature")
            if binarize_rule is not None:
                try:
                    y = binarize_rule(y)
                except ValueError as exc:
                    raise TabularParseError(f"{path}:{line}: {exc}") from None
            feats.append(x)
            labels.append(y)
    if not labels:
        raise TabularParseError(f"{path}: no labelled rows")

    X = np.asarray(feats, dtype=float).T
    Y = np.asarray(labels, dtype=float)[None, :]
    n = X.shape[1]
    idx = np.random.default_rng(seed).permutation(n) if test_fraction > 0 else np.arange(n)
    n_test = int(round(test_fraction * n))
    te, tr = idx[:n_test], idx[n_test:]
    Xtr, Xte = X[:, tr], X[:, te]
    rec = None
    if standardize:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            Xtr, rec = zscore(Xtr)
        Xte = rec.apply(Xte)
    meta = {"rows_read": read, "rows_dropped": dropped, "rows_kept": n}
    return Dataset(Xtr, Y[:, tr], Xte, Y[:, te],
                   task="binary" if binarize_rule is not None else "regression",
                   norm=rec, meta=meta)


def save_tabular(path, X, Y, feature_names: Optional[Sequence[str]] = None, label_column: str = "label") -> None:
    """Write samples (columns of ``X``/``Y``) as comma-separated rows with a header."""
    X = np.asarray(X, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(X.shape[0])]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + [label_column])
        for j in range(X.shape[1]):
            w.writerow([repr(float(v)) for v in X[:, j]] + [repr(float(Y[0, j]))])
