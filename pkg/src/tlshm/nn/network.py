"""Network runtime: ordered layers built from a NetworkSpec."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import spec as S
from .layers import build_layer


class Network:
    """Feed-forward network instance with owned parameters.

    Parameter arrays are built in spec order from a seeded rng, so two
    networks built from the same (spec, seed, dtype) are bitwise equal.
    """

    def __init__(self, net_spec: S.NetworkSpec, rng=None, dtype=np.float32):
        net_spec.validate()
        self.spec = net_spec
        self.dtype = np.dtype(dtype)
        if rng is None:
            rng = np.random.default_rng(0)
        self.layers = [build_layer(l, rng, self.dtype) for l in net_spec.layers]

    def forward(self, x, training=False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 2:
            x = x[:, None, :]
        if x.ndim != 3 or x.shape[1] != self.spec.in_channels:
            raise ShapeError(f"expected (batch, {self.spec.in_channels}, length) input, got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, grad_logits):
        g = np.asarray(grad_logits, dtype=self.dtype)
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def param_layers(self):
        """(name, layer) pairs for parameterized layers, depth-first spec order."""
        out = []

        def walk(layers, prefix):
            for i, layer in enumerate(layers):
                if hasattr(layer, "branch"):
                    walk(layer.branch, f"{prefix}{i}.")
                elif layer.has_params:
                    kind = type(layer.spec).__name__.lower()
                    out.append((f"{prefix}{i}.{kind}", layer))

        walk(self.layers, "")
        return out

    def state_arrays(self):
        """Ordered {name: array} of all parameters (live references)."""
        arrays = {}
        for name, layer in self.param_layers():
            arrays[f"{name}.weights"] = layer.weights
            arrays[f"{name}.bias"] = layer.bias
        return arrays

    def load_state_arrays(self, arrays):
        """Load parameter arrays by name; shapes must match exactly."""
        for name, layer in self.param_layers():
            for attr in ("weights", "bias"):
                key = f"{name}.{attr}"
                if key not in arrays:
                    raise ShapeError(f"missing parameter array {key!r}")
                src = np.asarray(arrays[key])
                dst = getattr(layer, attr)
                if src.shape != dst.shape:
                    raise ShapeError(f"layer {key!r}: stored shape {src.shape} != expected {dst.shape}")
                setattr(layer, attr, np.ascontiguousarray(src, dtype=self.dtype))

    def set_freeze_mask(self, mask):
        """Apply per-parameterized-layer freeze flags (spec order)."""
        layers = self.param_layers()
        if len(mask) != len(layers):
            raise ShapeError(f"freeze mask has {len(mask)} entries for {len(layers)} parameterized layers")
        for flag, (_, layer) in zip(mask, layers):
            layer.frozen = bool(flag)

    def astype(self, dtype):
        """Copy of this network with parameters cast to `dtype`."""
        other = Network(self.spec, rng=np.random.default_rng(0), dtype=dtype)
        other.load_state_arrays({k: v for k, v in self.state_arrays().items()})
        for (_, src), (_, dst) in zip(self.param_layers(), other.param_layers()):
            dst.frozen = src.frozen
        return other

    def n_params(self):
        return sum(a.size for a in self.state_arrays().values())
