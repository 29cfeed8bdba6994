"""Loss, optimizer, augmentation, and shape-algebra contracts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlshm.errors import NumericalError, UsageError
from tlshm.nn import spec as S
from tlshm.nn.augment import Batch, add_relative_noise, augment_gaussian
from tlshm.nn.layers import DenseLayer
from tlshm.nn.loss import softmax_cross_entropy
from tlshm.nn.network import Network
from tlshm.nn.optim import Adam

from oracles import cross_entropy_naive


# ---------------------------------------------------------------- loss

def test_uniform_logits_loss_is_log_c():
    for c in (2, 11, 37):
        logits = np.zeros((5, c))
        loss, _ = softmax_cross_entropy(logits, np.zeros(5, dtype=np.int64))
        assert abs(loss - math.log(c)) < 1e-12


def test_confident_correct_logits_drive_loss_to_zero():
    losses = []
    for margin in (1.0, 5.0, 20.0):
        logits = np.zeros((1, 4))
        logits[0, 2] = margin
        loss, _ = softmax_cross_entropy(logits, np.array([2]))
        losses.append(loss)
    assert losses[0] > losses[1] > losses[2]
    assert losses[-1] < 1e-8


def test_loss_matches_naive_and_gradient_is_softmax_minus_onehot():
    rng = np.random.default_rng(0)
    logits = rng.standard_normal((6, 37))
    labels = rng.integers(0, 37, 6)
    loss, grad = softmax_cross_entropy(logits, labels)
    assert abs(loss - cross_entropy_naive(logits, labels)) < 1e-12
    # finite differences on the logits
    eps = 1e-6
    for (i, j) in [(0, 0), (1, 5), (3, 36), (5, 17)]:
        base = logits.copy()
        base[i, j] += eps
        up, _ = softmax_cross_entropy(base, labels)
        base[i, j] -= 2 * eps
        dn, _ = softmax_cross_entropy(base, labels)
        fd = (up - dn) / (2 * eps)
        assert abs(fd - grad[i, j]) < 1e-6


def test_loss_is_stable_for_huge_logits():
    logits = np.array([[1000.0, 0.0], [0.0, 1000.0]])
    loss, grad = softmax_cross_entropy(logits, np.array([0, 1]))
    assert np.isfinite(loss) and loss < 1e-12
    assert np.all(np.isfinite(grad))


def test_non_finite_logits_raise():
    with pytest.raises(NumericalError):
        softmax_cross_entropy(np.array([[np.inf, 0.0]]), np.array([0]))


def test_bad_labels_raise():
    with pytest.raises(UsageError):
        softmax_cross_entropy(np.zeros((2, 3)), np.array([0, 3]))


# ---------------------------------------------------------------- adam

def tiny_dense_net(n_in=3, n_out=2, seed=0, dtype=np.float64):
    spec = S.NetworkSpec(name="tiny", in_channels=1, input_length=n_in, n_classes=n_out,
                         layers=(S.Flatten(), S.Dense(n_in, n_out)))
    return Network(spec, rng=np.random.default_rng(seed), dtype=dtype)


def test_adam_zero_gradients_leave_params_unchanged():
    net = tiny_dense_net()
    dense = net.layers[1]
    before = dense.weights.copy()
    opt = Adam(net, lr=0.1)
    dense.grad_weights = np.zeros_like(dense.weights)
    dense.grad_bias = np.zeros_like(dense.bias)
    for _ in range(5):
        opt.step()
    np.testing.assert_array_equal(dense.weights, before)


def test_adam_frozen_layer_is_bitwise_unchanged():
    net = tiny_dense_net()
    dense = net.layers[1]
    dense.frozen = True
    before_w = dense.weights.copy()
    before_b = dense.bias.copy()
    opt = Adam(net, lr=0.5)
    dense.grad_weights = np.ones_like(dense.weights)
    dense.grad_bias = np.ones_like(dense.bias)
    for _ in range(10):
        opt.step()
    assert dense.weights.tobytes() == before_w.tobytes()
    assert dense.bias.tobytes() == before_b.tobytes()


def test_adam_first_step_matches_hand_computed_value():
    # single scalar parameter, constant gradient g: the first update is
    # -lr * g / (|g| + eps / sqrt(1 - beta2))
    lr, beta1, beta2, eps = 1e-3, 0.9, 0.999, 1e-8
    g = 0.37
    net = tiny_dense_net(n_in=1, n_out=1)
    dense = net.layers[1]
    dense.weights[:] = 1.0
    dense.bias[:] = 0.0
    opt = Adam(net, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    dense.grad_weights = np.full_like(dense.weights, g)
    dense.grad_bias = np.zeros_like(dense.bias)
    opt.step()
    expected = 1.0 - lr * g / (abs(g) + eps / math.sqrt(1.0 - beta2))
    assert abs(dense.weights[0, 0] - expected) < 1e-15
    assert opt.t == 1


def test_adam_step_counter_increments_once_per_step():
    net = tiny_dense_net()
    dense = net.layers[1]
    opt = Adam(net)
    dense.grad_weights = np.zeros_like(dense.weights)
    dense.grad_bias = np.zeros_like(dense.bias)
    for i in range(4):
        opt.step()
    assert opt.t == 4


def test_adam_shape_mismatch_raises():
    net = tiny_dense_net()
    dense = net.layers[1]
    opt = Adam(net)
    dense.grad_weights = np.zeros((1, 1))
    dense.grad_bias = np.zeros_like(dense.bias)
    with pytest.raises(UsageError):
        opt.step()


# ---------------------------------------------------------------- augmentation

def test_augment_fraction_zero_is_bitwise_identity():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 1, 100)).astype(np.float32)
    batch = Batch(inputs=x, labels=np.zeros(4, dtype=np.int64))
    out = augment_gaussian(batch, 0.0, rng)
    assert out.inputs.tobytes() == x.tobytes()


def test_augment_noise_sigma_tracks_record_rms():
    rng = np.random.default_rng(1)
    x = (3.0 * rng.standard_normal((40, 1, 5000))).astype(np.float64)
    out = add_relative_noise(x, 0.1, rng)
    noise = out - x
    rms = np.sqrt(np.mean(x**2, axis=(1, 2)))
    sigma = noise.std(axis=(1, 2))
    np.testing.assert_allclose(sigma, 0.1 * rms, rtol=0.05)


def test_augment_successive_calls_differ():
    rng = np.random.default_rng(2)
    x = np.ones((2, 1, 50), dtype=np.float32)
    a = add_relative_noise(x, 0.1, rng)
    b = add_relative_noise(x, 0.1, rng)
    assert not np.array_equal(a, b)


def test_augment_negative_fraction_raises():
    with pytest.raises(UsageError):
        add_relative_noise(np.ones((1, 1, 4)), -0.1, np.random.default_rng(0))


# ---------------------------------------------------------------- shape algebra

@given(st.integers(1, 300), st.integers(1, 9), st.integers(1, 4), st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_conv_out_len_matches_enumeration(length, kernel, stride, padding):
    padded = length + 2 * padding
    if padded < kernel:
        return
    # count window start positions by brute force
    count = len([s for s in range(0, padded - kernel + 1, stride)])
    assert S.conv1d_out_len(length, kernel, stride, padding) == count


@given(st.integers(1, 300), st.integers(1, 9), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_pool_out_len_matches_enumeration(length, kernel, stride):
    if length < kernel:
        return
    count = len([s for s in range(0, length - kernel + 1, stride)])
    assert S.pool1d_out_len(length, kernel, stride) == count
