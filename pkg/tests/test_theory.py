import numpy as np
import pytest

from sigadmm.admm import (
    HyperParams,
    admm_step,
    check_runtime_invariants,
    init_state,
    theory_constants,
    theory_params,
    train,
    validate_params,
)
from sigadmm.admm.theory import lambda_floor, width_floor
from sigadmm.init import normalized_init
from sigadmm.net import NetParams

# Frozen from an independent 40-digit transcription of the constant formulas.
FROZEN = {
    "L3": 1.125,
    "gamma": 1.0,
    "f_min": 10.860172234291464,
    "alpha3": 1887.093455335604,
    "C3": 5.6568542494923802,
    "lam_tilde2": 44231.840167961469,
    "lam_bar": 44231.840167961469,
    "lam_hat": 9254.0595979358351,
    "xi": [21791.340705920368, 6.75, 0.63546875],
    "zeta": [0.5, -1377.625, -19.345],
    "eta": [-17468.248822828331, 23.25, 0.91381696428571429],
    "a": -39259.589528748699,
}


@pytest.fixture
def three_layer():
    W = [np.array([[0.6], [-0.8]]), np.array([[0.3, -0.4], [0.5, 0.2]]), np.array([[0.7, -0.1]])]
    X = np.array([[0.5, -0.25, 1.0, 0.75]])
    return NetParams(W), X, X**2, HyperParams(lam=1.0, beta=[400.0, 60.0, 3.5])


def test_constants_match_frozen_transcription(three_layer):
    net, X, Y, hp = three_layer
    tc = theory_constants(net, X, Y, hp)
    for key in ("L3", "gamma", "f_min", "alpha3", "C3", "lam_bar", "lam_hat", "a"):
        assert getattr(tc, key) == pytest.approx(FROZEN[key], rel=1e-12), key
    assert tc.lam_tilde[2] == pytest.approx(FROZEN["lam_tilde2"], rel=1e-12)
    for key in ("xi", "zeta", "eta"):
        assert getattr(tc, key) == pytest.approx(FROZEN[key], rel=1e-12), key
    assert tc.d_min == 2 and tc.n == 4


def test_f_min_small_instance():
    # n = 16, d_min = 1
    net = NetParams([np.array([[1.0]]), np.array([[1.0]])])
    X = np.linspace(-1, 1, 16)[None]
    tc = theory_constants(net, X, X**2, HyperParams(beta=[56.0, 3.5]))
    assert tc.f_min == pytest.approx(12.513625188972906, rel=1e-13)


def test_two_layer_weights():
    net = normalized_init([1, 6, 1], seed=4)
    X = np.linspace(-1, 1, 20)[None]
    b1, b2 = 56.0, 3.5
    tc = theory_constants(net, X, X**2, HyperParams(lam=1e5, beta=[b1, b2]))
    assert tc.gamma == pytest.approx(1.0, abs=1e-12)
    assert tc.xi[1] == pytest.approx(3 * b2**2 / b1, rel=1e-12)
    # layer 1 is the penultimate layer: empty proximal sum
    assert tc.xi[0] == 0.0
    assert tc.eta[0] == b1 / 2
    assert tc.a > 0


def test_infinite_constant_when_last_penalty_small():
    net = normalized_init([1, 3, 1], seed=0)
    X = np.linspace(-1, 1, 5)[None]
    tc = theory_constants(net, X, X**2, HyperParams(beta=1.0))
    assert tc.C3 == np.inf


class TestValidate:
    def _tc(self, beta, lam=1e6, seed=0):
        net = normalized_init([1, 8, 1], seed=seed)
        X = np.linspace(-1, 1, 30)[None]
        hp = HyperParams(lam=lam, beta=beta)
        return hp, theory_constants(net, X, X**2, hp)

    def test_small_last_penalty_fails(self):
        hp, tc = self._tc([56.0, 3.0])
        rep = validate_params(hp, tc)
        assert not rep["beta_N"].passed and not rep.passed

    def test_chain_passes_at_equality(self):
        hp, tc = self._tc([56.0, 3.5])
        rep = validate_params(hp, tc)
        assert rep["beta_N"].passed and rep["beta_N-1/beta_N"].passed

    def test_practical_defaults_fail_theory_but_train(self):
        net = normalized_init([1, 8, 1], seed=0)
        X = np.linspace(-1, 1, 30)[None]
        hp = HyperParams()
        assert not validate_params(hp, theory_constants(net, X, X**2, hp)).passed
        out, trace = train(net, X, X**2, HyperParams(epochs=3))
        assert len(trace.rows) == 3
        with pytest.raises(ValueError):
            train(net, X, X**2, HyperParams(mode="theory", epochs=3))

    def test_lambda_condition(self):
        hp, tc = self._tc([56.0, 3.5], lam=1.0)
        rep = validate_params(hp, tc)
        assert not rep["lambda"].passed
        assert rep["lambda"].bound == pytest.approx(lambda_floor(tc, 3.5))
        assert "lambda" in " ".join(rep.failures())

    def test_width_floor_vanishes_for_small_depth(self):
        _, tc = self._tc([56.0, 3.5])
        assert width_floor(tc) == 0.0


@pytest.mark.parametrize("dims", [[1, 6, 1], [1, 5, 5, 1], [2, 4, 4, 4, 1]])
def test_derived_parameters_validate(dims):
    net = normalized_init(dims, seed=1)
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (dims[0], 25))
    Y = np.sum(X, axis=0, keepdims=True) ** 2
    hp = theory_params(net, X, Y)
    rep = validate_params(hp, theory_constants(net, X, Y, hp))
    assert rep.passed, rep.failures()
    assert hp.mode == "theory"


def test_runtime_invariants_skip_dual_checks_at_first_iterate():
    net = normalized_init([1, 4, 1], seed=0)
    X = np.linspace(-1, 1, 10)[None]
    hp = theory_params(net, X, X**2, beta=[56.0, 3.5])
    tc = theory_constants(net, X, X**2, hp)
    s0 = init_state(net, X, X**2)
    s1 = admm_step(s0, hp)
    flags = check_runtime_invariants(s1, tc, hp, prev=s0)
    assert not any(k.startswith("dual") for k in flags)
    s2 = admm_step(s1, hp)
    flags = check_runtime_invariants(s2, tc, hp, prev=s1)
    assert flags["dual_N"] and flags["dual_N-1"]
    assert np.linalg.norm(s2.Lam[-1] - s1.Lam[-1]) == pytest.approx(np.linalg.norm(s2.V[-1] - s1.V[-1]), abs=1e-12)


def test_runtime_invariants_name_violations():
    net = normalized_init([1, 4, 1], seed=0)
    X = np.linspace(-1, 1, 10)[None]
    hp = theory_params(net, X, X**2, beta=[56.0, 3.5])
    tc = theory_constants(net, X, X**2, hp)
    s = init_state(net, X, X**2)
    s.W[0] = 10 * s.W[0]
    flags = check_runtime_invariants(s, tc, hp)
    assert flags["W_1_bounded"] is False and flags["W_2_bounded"] is True


def test_theory_run_three_layers_descends_and_stays_bounded():
    net = normalized_init([1, 4, 4, 1], seed=2)
    X = np.linspace(-1, 1, 12)[None]
    hp = theory_params(net, X, X**2, epochs=60)
    tc = theory_constants(net, X, X**2, hp)
    _, trace = train(net, X, X**2, hp, tc=tc)
    Lhat = trace.column("Lhat_value")
    assert np.all(np.diff(Lhat[1:]) <= 1e-10)
    for row in trace.rows:
        assert all(row.flags.values()), [k for k, v in row.flags.items() if not v]


def test_sufficient_descent_two_layers():
    net = normalized_init([1, 10, 1], seed=0)
    X = np.linspace(-1, 1, 50)[None]
    hp = theory_params(net, X, X**2, beta=[56.0, 3.5], epochs=80)
    tc = theory_constants(net, X, X**2, hp)
    assert tc.a > 0
    _, trace = train(net, X, X**2, hp, tc=tc)
    rows = trace.rows
    for prev, row in zip(rows[1:], rows[2:]):
        steps = sum(s**2 for s in row.step_W) + sum(s**2 for s in row.step_V)
        assert prev.Lhat_value - row.Lhat_value >= tc.a * steps - 1e-10
