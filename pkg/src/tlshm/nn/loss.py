"""Softmax cross-entropy with log-sum-exp stabilization."""

import numpy as np

from ..errors import NumericalError, UsageError


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch and its gradient w.r.t. logits.

    The scalar loss is always computed in float64 (so analytic identities
    like loss(uniform) == ln C hold to machine precision); the returned
    gradient matches the logits dtype. grad = (softmax - onehot) / batch.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise UsageError(f"logits must be (batch, classes), got shape {logits.shape}")
    b, c = logits.shape
    if labels.shape != (b,):
        raise UsageError(f"labels shape {labels.shape} does not match batch {b}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= c:
        raise UsageError("labels outside [0, n_classes)")
    if not np.all(np.isfinite(logits)):
        raise NumericalError("non-finite logits")

    z = logits.astype(np.float64)
    z -= z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - lse
    rows = np.arange(b)
    loss = float(-logp[rows, labels].mean())

    grad = np.exp(logp)
    grad[rows, labels] -= 1.0
    grad /= b
    return loss, grad.astype(logits.dtype)


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
