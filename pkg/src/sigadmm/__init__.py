"""Training deep sigmoid nets by ADMM, with SGD baselines and approximation benchmarks."""

from .net import RELU, SIGMOID, Activation, NetParams, forward, predict

__version__ = "0.1.0"

__all__ = [
    "RELU",
    "SIGMOID",
    "Activation",
    "NetParams",
    "forward",
    "predict",
]
