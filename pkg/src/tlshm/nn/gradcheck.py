"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .loss import softmax_cross_entropy
from .network import Network


def grad_check(network: Network, x, y, eps=1e-5, samples_per_array=8, rng=None,
               grad_scale=1.0):
    """Max relative error between analytic and central-difference gradients.

    Runs in eval mode (dropout off) and requires a float64 network.
    `samples_per_array` entries of every parameter array are probed.
    `grad_scale` multiplies the analytic gradients before comparison; it is
    a fault-injection hook used to verify the check actually detects wrong
    gradients (scale 1.1 must be flagged).
    """
    if network.dtype != np.float64:
        raise UsageError("grad_check needs a float64 network (build with dtype=np.float64)")
    if rng is None:
        rng = np.random.default_rng(0)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)

    def loss_at():
        logits = network.forward(x, training=False)
        loss, _ = softmax_cross_entropy(logits, y)
        return loss

    logits = network.forward(x, training=False)
    _, grad_logits = softmax_cross_entropy(logits, y)
    network.backward(grad_logits)

    max_rel = 0.0
    for name, layer in network.param_layers():
        for attr in ("weights", "bias"):
            theta = getattr(layer, attr)
            analytic = getattr(layer, f"grad_{attr}") * grad_scale
            flat = theta.reshape(-1)
            n = flat.size
            k = min(samples_per_array, n)
            picks = rng.choice(n, size=k, replace=False)
            for i in picks:
                orig = flat[i]
                h = eps * max(1.0, abs(orig))
                flat[i] = orig + h
                f_plus = loss_at()
                flat[i] = orig - h
                f_minus = loss_at()
                flat[i] = orig
                fd = (f_plus - f_minus) / (2.0 * h)
                an = analytic.reshape(-1)[i]
                denom = max(abs(fd) + abs(an), 1e-6)
                rel = abs(fd - an) / denom
                if rel > max_rel:
                    max_rel = rel
    return max_rel
