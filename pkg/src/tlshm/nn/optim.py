"""Adam optimizer with per-layer freeze masks."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from . import kernels as K


class Adam:
    """Adam with bias correction in the efficient (epsilon-hat) form.

    m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
    theta <- theta - lr * sqrt(1-b2^t)/(1-b1^t) * m / (sqrt(v) + eps)

    so the first step with gradient g is -lr * g / (|g| + eps/sqrt(1-b2)).
    Frozen layers are skipped entirely: their parameters stay bitwise
    unchanged and their moment buffers are never touched. The step counter
    increments exactly once per step() call.
    """

    def __init__(self, network, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.network = network
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self._slots = {}
        for name, layer in network.param_layers():
            self._slots[name] = {
                "m_w": np.zeros_like(layer.weights),
                "v_w": np.zeros_like(layer.weights),
                "m_b": np.zeros_like(layer.bias),
                "v_b": np.zeros_like(layer.bias),
            }

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr * np.sqrt(bc2) / bc1
        for name, layer in self.network.param_layers():
            if layer.frozen:
                continue
            if layer.grad_weights is None or layer.grad_bias is None:
                raise UsageError(f"layer {name!r} has no gradients; run backward first")
            if layer.grad_weights.shape != layer.weights.shape:
                raise UsageError(f"layer {name!r}: gradient shape {layer.grad_weights.shape} "
                                 f"does not match parameter shape {layer.weights.shape}")
            slot = self._slots[name]
            self._update(layer.weights, layer.grad_weights, slot["m_w"], slot["v_w"], step_size)
            self._update(layer.bias, layer.grad_bias, slot["m_b"], slot["v_b"], step_size)

    def _update(self, theta, grad, m, v, step_size):
        dt = theta.dtype.type
        K.adam_update(theta.reshape(-1), np.ascontiguousarray(grad).reshape(-1),
                      m.reshape(-1), v.reshape(-1),
                      dt(self.beta1), dt(self.beta2), dt(self.eps), dt(step_size))

    def state_arrays(self):
        """Moment buffers keyed by parameter name (for checkpointing)."""
        out = {"t": np.array([self.t], dtype=np.int64)}
        for name, slot in self._slots.items():
            for key, arr in slot.items():
                out[f"{name}.{key}"] = arr
        return out
