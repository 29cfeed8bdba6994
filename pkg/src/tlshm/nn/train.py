"""Minibatch training loop shared by pretraining, fine-tuning and scratch runs."""

from __future__ import annotations

import numpy as np

from .._threads import compute_threads
from ..errors import NumericalError, TrainingError
from .augment import add_relative_noise
from .loss import softmax_cross_entropy
from .network import Network
from .optim import Adam


def train_network(network: Network, X, y, *, epochs, batch_size, lr,
                  noise_fraction=0.0, rng=None, beta1=0.9, beta2=0.999,
                  adam_eps=1e-8, early_stop_patience=0, verbose=0):
    """Train in place with Adam + per-batch Gaussian augmentation.

    Returns the per-epoch history: dicts with epoch, mean loss, and accuracy
    on the (augmented) training batches. If `early_stop_patience` > 0,
    training stops once batch accuracy has held at 100% for that many
    consecutive epochs; a zero value always runs the full budget, which is
    what the transfer-vs-scratch comparison arms use.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    X = np.asarray(X, dtype=network.dtype)
    if X.ndim == 2:
        X = X[:, None, :]
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise TrainingError("empty training set")

    opt = Adam(network, lr=lr, beta1=beta1, beta2=beta2, eps=adam_eps)
    history = []
    perfect_streak = 0
    with compute_threads():
        for epoch in range(epochs):
            order = rng.permutation(n)
            total_loss = 0.0
            total_correct = 0
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                xb = add_relative_noise(X[idx], noise_fraction, rng)
                logits = network.forward(xb, training=True, rng=rng)
                try:
                    loss, grad = softmax_cross_entropy(logits, y[idx])
                except NumericalError as exc:
                    raise TrainingError(f"diverged at epoch {epoch}: {exc}") from exc
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}")
                network.backward(grad)
                opt.step()
                total_loss += loss * len(idx)
                total_correct += int((logits.argmax(axis=1) == y[idx]).sum())
            acc = total_correct / n
            history.append({"epoch": epoch, "loss": total_loss / n, "accuracy": acc})
            if verbose and (epoch % max(1, epochs // 20) == 0 or epoch == epochs - 1):
                print(f"epoch {epoch:4d}  loss {total_loss / n:.4f}  acc {acc:.3f}")
            if early_stop_patience > 0:
                perfect_streak = perfect_streak + 1 if acc >= 1.0 else 0
                if perfect_streak >= early_stop_patience:
                    break
    return history


def predict_logits(network: Network, X, batch_size=64):
    """Eval-mode logits (dropout off)."""
    X = np.asarray(X, dtype=network.dtype)
    if X.ndim == 2:
        X = X[:, None, :]
    with compute_threads():
        chunks = [network.forward(X[s:s + batch_size], training=False).copy()
                  for s in range(0, X.shape[0], batch_size)]
    return np.concatenate(chunks, axis=0) if chunks else np.zeros((0, network.spec.n_classes))
