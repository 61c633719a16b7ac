import sys

import numpy as np
import pytest

from sigadmm.admm import ADMMState
from sigadmm.admm.state import LLACoefficients


def random_state(rng, dims, n, scale=1.0):
    """Arbitrary (not forward-consistent) state with shadow equal to V."""
    N = len(dims) - 1
    W = [scale * rng.normal(size=(dims[i + 1], dims[i])) for i in range(N)]
    V = [rng.normal(size=(dims[i + 1], n)) for i in range(N)]
    Lam = [rng.normal(size=(dims[i + 1], n)) for i in range(N)]
    X = rng.normal(size=(dims[0], n))
    Y = rng.normal(size=(dims[-1], n))
    return ADMMState(W=W, V=V, Lam=Lam, V_prev=[A.copy() for A in V], X=X, Y=Y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def lla_from(h, mu):
    return LLACoefficients(h=list(h), mu=list(mu))


ACCEPTANCE_CRITERIA = 12


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in range(1, ACCEPTANCE_CRITERIA + 1):
        parts = mod.RESULTS.get(c)
        if not parts:
            tr.write_line(f"criterion {c:2d}: NOT RUN")
            continue
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"criterion {c:2d}: {status}")
        for part, ok, detail in parts:
            tr.write_line(f"    [{'ok' if ok else 'FAIL'}] {part}: {detail}")
