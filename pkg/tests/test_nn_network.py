"""Network-level gradient verification and training-loop contracts."""

import numpy as np
import pytest

from tlshm.arch import build_shmnet
from tlshm.errors import TrainingError
from tlshm.nn import spec as S
from tlshm.nn.gradcheck import grad_check
from tlshm.nn.network import Network
from tlshm.nn.train import predict_logits, train_network


def tiny_shmnet_spec(n_classes=4, length=64):
    """SHMnet-shaped net scaled to run the finite-difference loop quickly."""
    trunk = (
        S.Conv1d(1, 2, 7, 1, 0), S.Relu(), S.MaxPool1d(3, 2),
        S.Conv1d(2, 4, 5, 1, 0), S.Relu(), S.MaxPool1d(3, 2),
        S.Conv1d(4, 8, 3, 1, 0), S.Relu(), S.MaxPool1d(3, 2),
    )
    shape = (1, length)
    for l in trunk:
        shape = S.propagate_shape(l, shape)
    flat = shape[0] * shape[1]
    layers = trunk + (
        S.Flatten(), S.Dropout(0.5), S.Dense(flat, 16), S.Relu(),
        S.Dropout(0.5), S.Dense(16, 16), S.Relu(), S.Dense(16, n_classes),
    )
    return S.NetworkSpec(name="tiny-shmnet", in_channels=1, input_length=length,
                         n_classes=n_classes, layers=layers).validate()


def test_grad_check_linear_dense_net():
    spec = S.NetworkSpec(name="linear", in_channels=1, input_length=6, n_classes=3,
                         layers=(S.Flatten(), S.Dense(6, 3)))
    net = Network(spec, rng=np.random.default_rng(0), dtype=np.float64)
    x = np.random.default_rng(1).standard_normal((4, 1, 6))
    y = np.array([0, 1, 2, 1])
    err = grad_check(net, x, y, eps=1e-5, samples_per_array=21, rng=np.random.default_rng(2))
    assert err < 1e-9


def test_grad_check_tiny_shmnet():
    net = Network(tiny_shmnet_spec(), rng=np.random.default_rng(3), dtype=np.float64)
    x = np.random.default_rng(4).standard_normal((3, 1, 64))
    y = np.array([0, 2, 3])
    err = grad_check(net, x, y, eps=1e-5, samples_per_array=6, rng=np.random.default_rng(5))
    assert err < 1e-5


def test_grad_check_detects_corrupted_gradients():
    net = Network(tiny_shmnet_spec(), rng=np.random.default_rng(3), dtype=np.float64)
    x = np.random.default_rng(4).standard_normal((3, 1, 64))
    y = np.array([0, 2, 3])
    err = grad_check(net, x, y, eps=1e-5, samples_per_array=6,
                     rng=np.random.default_rng(5), grad_scale=1.1)
    assert err > 1e-2


def test_grad_check_requires_float64():
    net = Network(tiny_shmnet_spec(), rng=np.random.default_rng(0), dtype=np.float32)
    with pytest.raises(Exception):
        grad_check(net, np.zeros((1, 1, 64)), np.array([0]))


def test_network_build_is_seed_deterministic():
    spec = tiny_shmnet_spec()
    a = Network(spec, rng=np.random.default_rng(11), dtype=np.float32)
    b = Network(spec, rng=np.random.default_rng(11), dtype=np.float32)
    for (na, arr_a), (nb, arr_b) in zip(a.state_arrays().items(), b.state_arrays().items()):
        assert na == nb
        assert arr_a.tobytes() == arr_b.tobytes()


def test_training_is_deterministic_given_seed():
    spec = tiny_shmnet_spec()
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 64)).astype(np.float32)
    y = np.arange(8) % 4
    runs = []
    for _ in range(2):
        net = Network(spec, rng=np.random.default_rng(1), dtype=np.float32)
        hist = train_network(net, X, y, epochs=5, batch_size=4, lr=1e-3,
                             noise_fraction=0.1, rng=np.random.default_rng(2))
        runs.append((hist, {k: v.tobytes() for k, v in net.state_arrays().items()}))
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]


def test_training_raises_on_divergence():
    spec = S.NetworkSpec(name="linear", in_channels=1, input_length=4, n_classes=2,
                         layers=(S.Flatten(), S.Dense(4, 2)))
    net = Network(spec, rng=np.random.default_rng(0), dtype=np.float32)
    X = np.full((4, 4), 1e30, dtype=np.float32)
    y = np.array([0, 1, 0, 1])
    with pytest.raises(TrainingError) as exc:
        train_network(net, X, y, epochs=3, batch_size=2, lr=1e20, rng=np.random.default_rng(0))
    assert "epoch" in str(exc.value)


def test_predict_logits_chunks_do_not_alias():
    net = Network(tiny_shmnet_spec(), rng=np.random.default_rng(0), dtype=np.float32)
    X = np.random.default_rng(1).standard_normal((7, 64)).astype(np.float32)
    all_at_once = predict_logits(net, X, batch_size=7)
    chunked = predict_logits(net, X, batch_size=2)
    np.testing.assert_allclose(all_at_once, chunked, rtol=1e-6, atol=1e-7)


def test_full_shmnet_shape_chain_matches_reference_table():
    spec = build_shmnet(11)
    rows = [(type(layer).__name__, sin, sout) for layer, sin, sout in spec.shape_chain()]
    assert rows == [
        ("Conv1d", (1, 5000), (16, 4994)),
        ("Relu", (16, 4994), (16, 4994)),
        ("MaxPool1d", (16, 4994), (16, 2496)),
        ("Conv1d", (16, 2496), (64, 2492)),
        ("Relu", (64, 2492), (64, 2492)),
        ("MaxPool1d", (64, 2492), (64, 1245)),
        ("Conv1d", (64, 1245), (256, 1243)),
        ("Relu", (256, 1243), (256, 1243)),
        ("MaxPool1d", (256, 1243), (256, 621)),
        ("Flatten", (256, 621), 158976),
        ("Dropout", 158976, 158976),
        ("Dense", 158976, 1024),
        ("Relu", 1024, 1024),
        ("Dropout", 1024, 1024),
        ("Dense", 1024, 1024),
        ("Relu", 1024, 1024),
        ("Dense", 1024, 11),
    ]
