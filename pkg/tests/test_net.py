import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import sig
from sigadmm.net import (
    RELU,
    SIGMOID,
    Activation,
    NetParams,
    activation,
    check_dims,
    empirical_loss,
    forward,
    lipschitz_bound,
    max_norm,
    mse,
    predict,
    sigmoid,
    sigmoid_prime,
)


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(1e4) == 1.0
    assert sigmoid(-1e4) == 0.0
    np.testing.assert_allclose(sigmoid(np.array([-2.0, 0.3, 5.0])), sig(np.array([-2.0, 0.3, 5.0])), rtol=1e-15)


def test_sigmoid_no_overflow_warning():
    with np.errstate(all="raise"):
        sigmoid(np.array([-800.0, 800.0]))


@given(st.floats(-50, 50))
def test_sigmoid_symmetry(u):
    assert sigmoid(u) + sigmoid(-u) == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= sigmoid_prime(u) <= 0.25


def test_activation_bounds_and_relu_subgradient():
    assert SIGMOID.bounds == (1.0, 0.25, 0.25)
    assert RELU.derivative(np.array([-1.0, 0.0, 2.0])).tolist() == [0.0, 0.0, 1.0]
    assert activation("relu") is RELU
    with pytest.raises(ValueError):
        Activation("tanh")


def test_lipschitz_bound():
    assert lipschitz_bound(0.0) == pytest.approx(0.625)
    assert lipschitz_bound(1.0) == pytest.approx(1.125)
    with pytest.raises(ValueError):
        lipschitz_bound(-0.1)


@given(st.floats(0, 100), st.floats(0, 100))
def test_lipschitz_bound_monotone(a, b):
    lo, hi = sorted((a, b))
    assert lipschitz_bound(lo) <= lipschitz_bound(hi)


def test_max_norm():
    assert max_norm(np.array([[1.0, -3.0], [2.0, 0.5]])) == 3.0
    assert max_norm(np.zeros((0, 3))) == 0.0


def test_netparams_shape_chain():
    with pytest.raises(ValueError):
        NetParams([np.zeros((3, 2)), np.zeros((1, 4))])
    with pytest.raises(ValueError):
        NetParams([])
    net = NetParams([np.zeros((3, 2)), np.zeros((1, 3))])
    assert net.depth == 2 and net.dims == [2, 3, 1] and net.num_params == 9


def test_forward_last_layer_linear(rng):
    W1, W2 = rng.normal(size=(3, 2)), rng.normal(size=(1, 3))
    X = rng.normal(size=(2, 5))
    out, V = forward(NetParams([W1, W2]), X)
    np.testing.assert_allclose(V[0], sig(W1 @ X), rtol=1e-14)
    np.testing.assert_allclose(out, W2 @ sig(W1 @ X), rtol=1e-13)
    assert out is V[-1]


def test_forward_shape_error(rng):
    with pytest.raises(ValueError):
        forward(NetParams([rng.normal(size=(3, 2))]), rng.normal(size=(3, 4)))


def test_empirical_loss_by_hand():
    net = NetParams([np.array([[2.0]])])
    X, Y = np.array([[1.0, 2.0]]), np.array([[1.0, 1.0]])
    # residuals 1 and 3: (1 + 9)/2 + 0.5 * 4
    assert empirical_loss(net, X, Y, 0.5) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        empirical_loss(net, X, Y, -1.0)


@settings(max_examples=30)
@given(arrays(float, (3, 4), elements=st.floats(-5, 5)), arrays(float, (3, 4), elements=st.floats(-5, 5)))
def test_mse_properties(a, b):
    assert mse(a, b) == pytest.approx(mse(b, a))
    assert mse(a, a) == 0.0
    assert mse(a, b) >= 0.0


def test_predict_matches_forward(rng):
    net = NetParams([rng.normal(size=(4, 1)), rng.normal(size=(4, 4)), rng.normal(size=(1, 4))])
    X = rng.normal(size=(1, 6))
    np.testing.assert_array_equal(predict(net, X), forward(net, X)[0])


def test_check_dims():
    assert check_dims([1, 2.0, 3]) == [1, 2, 3]
    with pytest.raises(ValueError):
        check_dims([3])
    with pytest.raises(ValueError):
        check_dims([2, 0, 1])
