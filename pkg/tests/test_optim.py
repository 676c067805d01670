import numpy as np
import pytest

from bmnet.errors import ConfigError, DivergenceError
from bmnet.optim import SgdState, step
from bmnet.tensor import GradNode


def param(value, grad):
    p = GradNode(np.atleast_1d(float(value)))
    p.grad = np.atleast_1d(float(grad))
    return p


def test_plain_sgd():
    p = param(1.0, 2.0)
    step({"w": p}, SgdState(lr=0.1, momentum=0.0, weight_decay=0.0))
    assert p.value[0] == pytest.approx(0.8)
    assert p.grad[0] == 0.0


def test_zero_grad_decays_velocity():
    p = param(1.0, 0.0)
    state = SgdState(lr=0.1, momentum=0.9, weight_decay=0.0, velocity={"w": np.array([2.0])})
    step({"w": p}, state)
    assert state.velocity["w"][0] == pytest.approx(1.8)
    assert p.value[0] == pytest.approx(1.0 - 0.18)


def test_momentum_recursion():
    p = param(0.0, 1.0)
    state = SgdState(lr=1.0, momentum=0.9, weight_decay=0.0)
    step({"w": p}, state)
    assert state.velocity["w"][0] == 1.0 and p.value[0] == -1.0
    p.grad[:] = 1.0
    step({"w": p}, state)
    assert state.velocity["w"][0] == pytest.approx(1.9)
    assert p.value[0] == pytest.approx(-2.9)


def test_weight_decay_skips_batchnorm_affine():
    w, g = param(2.0, 0.0), param(2.0, 0.0)
    step({"conv1.w": w, "conv1.gamma": g}, SgdState(lr=1.0, momentum=0.0, weight_decay=0.5), no_decay={"conv1.gamma"})
    assert w.value[0] == pytest.approx(1.0)
    assert g.value[0] == 2.0


def test_quadratic_converges():
    w = GradNode([1.0])
    state = SgdState(lr=0.1, momentum=0.9, weight_decay=0.0)
    for _ in range(200):
        w.grad = w.value.copy()  # d/dw of w^2 / 2
        step({"w": w}, state)
    assert abs(w.value[0]) < 1e-3


def test_nan_gradient_names_parameter():
    with pytest.raises(DivergenceError, match="fc1.W"):
        step({"fc1.W": param(1.0, float("nan"))}, SgdState())


def test_invalid_lr():
    with pytest.raises(ConfigError):
        SgdState(lr=0.0)
