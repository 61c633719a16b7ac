"""Minibatch SGD with backpropagation, the baseline the ADMM trainer is compared against."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .bench import Dataset, metrics
from .net import NetParams, empirical_loss, predict

log = logging.getLogger(__name__)


@dataclass
class SGDConfig:
    lr0: float = 0.1
    decay: float = 0.95
    decay_every: int = 10
    batch_size: int = 50
    epochs: int = 2000
    reg: float = 0.0

    def __post_init__(self):
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        if self.batch_size < 1 or self.decay_every < 1:
            raise ValueError("batch_size and decay_every must be at least 1")
        if self.epochs < 0 or self.reg < 0:
            raise ValueError("epochs and reg must be nonnegative")


def lr_schedule(epoch: int, cfg: SGDConfig) -> float:
    """Step-exponential decay: ``lr0 * decay ** (epoch // decay_every)``."""
    if epoch < 0:
        raise ValueError("epoch must be nonnegative")
    return cfg.lr0 * cfg.decay ** (epoch // cfg.decay_every)


def backprop_grad(net: NetParams, Xb, Yb, reg: float = 0.0) -> List[np.ndarray]:
    """Gradient of ``(1/b) sum ||net(x) - y||^2 + reg * sum ||W_i||_F^2``."""
    Xb = np.asarray(Xb, dtype=float)
    Yb = np.asarray(Yb, dtype=float)
    N = net.depth
    act = net.activation
    acts, pre = [Xb], []
    for i, W in enumerate(net.weights, start=1):
        U = W @ acts[-1]
        pre.append(U)
        acts.append(act(U) if i < N else U)
    if acts[-1].shape != Yb.shape:
        raise ValueError(f"output shape {acts[-1].shape} != label shape {Yb.shape}")
    b = Xb.shape[1]
    delta = 2.0 / b * (acts[-1] - Yb)
    grads = [None] * N
    for i in range(N - 1, -1, -1):
        grads[i] = delta @ acts[i].T + 2.0 * reg * net.weights[i]
        if i > 0:
            delta = (net.weights[i].T @ delta) * act.derivative(pre[i - 1])
    return grads


@dataclass
class SGDTrace:
    epoch: List[int] = field(default_factory=list)
    train_loss: List[float] = field(default_factory=list)
    test_metric: List[float] = field(default_factory=list)
    lr: List[float] = field(default_factory=list)
    grad_norm_layer1: List[float] = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""

    COLUMNS = ("epoch", "train_loss", "test_metric", "lr", "grad_norm_layer1")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                w.writerow([row[0], *(repr(float(v)) for v in row[1:])])


def train_sgd(
    net0: NetParams,
    dataset: Dataset,
    cfg: SGDConfig,
    seed: Optional[int] = 0,
) -> tuple[NetParams, SGDTrace]:
    """Shuffled minibatch passes over the training split.

    Each epoch records the full-batch training loss, the test metric (MSE, or
    accuracy for binary tasks) and the full-batch first-layer gradient norm.
    A non-finite loss stops the run and the last finite weights are returned.
    """
    rng = np.random.default_rng(seed)
    net = net0.copy()
    X, Y = dataset.X_train, dataset.Y_train
    n = X.shape[1]
    trace = SGDTrace()
    key = "accuracy" if dataset.task == "binary" else "mse"
    # overflow while diverging is expected; the non-finite check below handles it
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            lr = lr_schedule(epoch, cfg)
            order = rng.permutation(n)
            last_good = [W.copy() for W in net.weights]
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                g = backprop_grad(net, X[:, idx], Y[:, idx], cfg.reg)
                for W, G in zip(net.weights, g):
                    W -= lr * G
            loss = empirical_loss(net, X, Y, cfg.reg)
            if not np.isfinite(loss):
                net = NetParams(last_good, net.activation)
                trace.aborted = True
                trace.abort_reason = f"non-finite loss at epoch {epoch}"
                log.warning(trace.abort_reason)
                break
            g1 = backprop_grad(net, X, Y, cfg.reg)[0]
            test = metrics(predict(net, dataset.X_test), dataset.Y_test, dataset.task)[key] if dataset.n_test else float("nan")
            trace.epoch.append(epoch)
            trace.train_loss.append(loss)
            trace.test_metric.append(test)
            trace.lr.append(lr)
            trace.grad_norm_layer1.append(float(np.linalg.norm(g1)))
    return net, trace
