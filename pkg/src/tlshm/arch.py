"""SHMnet-family network builders, parameter accounting, and transfer plumbing.

The reference classifier is a three-stage 1D conv trunk (16/64/256 filters,
kernels 7/5/3, each followed by 3-wide stride-2 max pooling) feeding a
dropout-regularized two-layer 1024-wide dense stack and a linear class head.
With a 1x5000 input the flattened trunk width is 158,976 and the 11-class
network holds 163,908,043 parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError
from .nn import spec as S
from .nn.layers import he_init

SHMNET_INPUT_LENGTH = 5000
SHMNET_HIDDEN_WIDTH = 1024

STRATEGY_ALIASES = {
    "off": "transfer_off",
    "transfer_off": "transfer_off",
    "s1": "s1_freeze_conv",
    "s1_freeze_conv": "s1_freeze_conv",
    "s2": "s2_freeze_fc",
    "s2_freeze_fc": "s2_freeze_fc",
    "s3": "s3_full",
    "s3_full": "s3_full",
}


def normalize_strategy(strategy: str) -> str:
    try:
        return STRATEGY_ALIASES[str(strategy).lower()]
    except KeyError:
        raise UsageError(f"unknown transfer strategy {strategy!r}; "
                         f"expected one of {sorted(set(STRATEGY_ALIASES))}") from None


@dataclass(frozen=True)
class FreezeMask:
    """Per-parameterized-layer freeze flags plus the strategy tag they encode."""

    flags: tuple
    strategy: str

    def __post_init__(self):
        object.__setattr__(self, "flags", tuple(bool(f) for f in self.flags))

    def __len__(self):
        return len(self.flags)

    def __iter__(self):
        return iter(self.flags)


class ParamCounts(NamedTuple):
    trainable: int
    frozen: int
    total: int


def iter_param_specs(layers, prefix=""):
    """(name, layer_spec) for parameterized layers, depth-first.

    Names match Network.param_layers so checkpoint arrays stay addressable.
    """
    for i, layer in enumerate(layers):
        if isinstance(layer, S.Residual):
            yield from iter_param_specs(layer.branch, f"{prefix}{i}.")
        elif isinstance(layer, (S.Conv1d, S.Dense)):
            yield f"{prefix}{i}.{type(layer).__name__.lower()}", layer


def layer_param_count(layer) -> int:
    if isinstance(layer, S.Conv1d):
        return layer.out_channels * layer.in_channels * layer.kernel_size + layer.out_channels
    if isinstance(layer, S.Dense):
        return layer.out_features * layer.in_features + layer.out_features
    raise UsageError(f"layer {layer!r} has no parameters")


def _head(flat_width, hidden_width, n_classes, dropout):
    return (
        S.Flatten(),
        S.Dropout(dropout),
        S.Dense(flat_width, hidden_width),
        S.Relu(),
        S.Dropout(dropout),
        S.Dense(hidden_width, hidden_width),
        S.Relu(),
        S.Dense(hidden_width, n_classes),
    )


def _flat_width(trunk, in_channels, input_length):
    shape = (in_channels, input_length)
    for layer in trunk:
        shape = S.propagate_shape(layer, shape)
    c, length = shape
    return c * length


def build_shmnet(n_classes, input_length=SHMNET_INPUT_LENGTH,
                 hidden_width=SHMNET_HIDDEN_WIDTH, in_channels=1,
                 dropout=0.5, name=None) -> S.NetworkSpec:
    """Three-conv trunk + two hidden dense layers; final dense emits raw logits."""
    if n_classes < 2:
        raise UsageError(f"need at least 2 classes, got {n_classes}")
    trunk = (
        S.Conv1d(in_channels, 16, 7, 1, 0), S.Relu(), S.MaxPool1d(3, 2),
        S.Conv1d(16, 64, 5, 1, 0), S.Relu(), S.MaxPool1d(3, 2),
        S.Conv1d(64, 256, 3, 1, 0), S.Relu(), S.MaxPool1d(3, 2),
    )
    flat = _flat_width(trunk, in_channels, input_length)
    layers = trunk + _head(flat, hidden_width, n_classes, dropout)
    return S.NetworkSpec(
        name=name or f"shmnet{n_classes}",
        in_channels=in_channels,
        input_length=input_length,
        n_classes=n_classes,
        layers=layers,
    ).validate()


def build_deep_conv(conv_channels=(16, 16, 64, 64, 256, 256),
                    kernels=(7, 7, 5, 5, 3, 3), pool_every=2,
                    n_classes=11, input_length=SHMNET_INPUT_LENGTH,
                    hidden_width=SHMNET_HIDDEN_WIDTH, in_channels=1,
                    dropout=0.5, name="deepconv") -> S.NetworkSpec:
    """Plain deep conv stack (default doubles the reference trunk depth)."""
    if len(conv_channels) != len(kernels) or not conv_channels:
        raise UsageError("conv_channels and kernels must be equal-length, non-empty")
    trunk = []
    c_prev = in_channels
    for i, (c, k) in enumerate(zip(conv_channels, kernels)):
        trunk += [S.Conv1d(c_prev, c, k, 1, 0), S.Relu()]
        if (i + 1) % pool_every == 0:
            trunk.append(S.MaxPool1d(3, 2))
        c_prev = c
    trunk = tuple(trunk)
    flat = _flat_width(trunk, in_channels, input_length)
    layers = trunk + _head(flat, hidden_width, n_classes, dropout)
    return S.NetworkSpec(name=name, in_channels=in_channels, input_length=input_length,
                         n_classes=n_classes, layers=layers).validate()


def residual_block(channels, kernel=3) -> S.Residual:
    """Identity-skip block; length is preserved by same-padding convs."""
    pad = kernel // 2
    return S.Residual((
        S.Conv1d(channels, channels, kernel, 1, pad),
        S.Relu(),
        S.Conv1d(channels, channels, kernel, 1, pad),
    ))


def build_residual(stage_channels=(16, 32, 64), blocks_per_stage=2, kernel=3,
                   n_classes=11, input_length=SHMNET_INPUT_LENGTH,
                   hidden_width=SHMNET_HIDDEN_WIDTH, in_channels=1,
                   dropout=0.5, name="residual") -> S.NetworkSpec:
    """Residual-block stack with identity skips and the same head structure."""
    if not stage_channels or blocks_per_stage < 1:
        raise UsageError("need at least one stage and one block per stage")
    trunk = []
    c_prev = in_channels
    for c in stage_channels:
        trunk += [S.Conv1d(c_prev, c, kernel, 1, 0), S.Relu(), S.MaxPool1d(3, 2)]
        for _ in range(blocks_per_stage):
            trunk += [residual_block(c, kernel), S.Relu()]
        c_prev = c
    trunk = tuple(trunk)
    flat = _flat_width(trunk, in_channels, input_length)
    layers = trunk + _head(flat, hidden_width, n_classes, dropout)
    return S.NetworkSpec(name=name, in_channels=in_channels, input_length=input_length,
                         n_classes=n_classes, layers=layers).validate()


def freeze_for_strategy(net_spec: S.NetworkSpec, strategy: str) -> FreezeMask:
    """Freeze flags for a transfer strategy.

    s1 freezes every conv layer; s2 freezes every dense layer except the
    class head (convs and head stay trainable); s3 and transfer_off freeze
    nothing.
    """
    tag = normalize_strategy(strategy)
    params = list(iter_param_specs(net_spec.layers))
    if not params:
        raise UsageError("network has no parameterized layers")
    dense_idx = [i for i, (_, l) in enumerate(params) if isinstance(l, S.Dense)]
    flags = [False] * len(params)
    if tag == "s1_freeze_conv":
        flags = [isinstance(l, S.Conv1d) for _, l in params]
    elif tag == "s2_freeze_fc":
        head = dense_idx[-1] if dense_idx else -1
        hidden_dense = set(dense_idx) - {head}
        flags = [i in hidden_dense for i in range(len(params))]
    return FreezeMask(flags=tuple(flags), strategy=tag)


def count_params(net_spec: S.NetworkSpec, mask: FreezeMask | None = None) -> ParamCounts:
    """Exact integer parameter counts, partitioned by the freeze mask."""
    params = list(iter_param_specs(net_spec.layers))
    if mask is None:
        mask = FreezeMask(flags=(False,) * len(params), strategy="transfer_off")
    if len(mask) != len(params):
        raise UsageError(f"mask length {len(mask)} != {len(params)} parameterized layers")
    trainable = frozen = 0
    for flag, (_, layer) in zip(mask, params):
        n = layer_param_count(layer)
        if flag:
            frozen += n
        else:
            trainable += n
    return ParamCounts(trainable=trainable, frozen=frozen, total=trainable + frozen)


def swap_head(ckpt, n_classes, rng=None, mode="head_only"):
    """Checkpoint copy with replacement dense layers for a new class count.

    head_only reinitializes the final dense layer; all_fc reinitializes every
    dense layer. Conv arrays are carried over bitwise. With rng=None and an
    unchanged class count this is a pure copy (copy mode).
    """
    from .checkpoint import Checkpoint  # local import; checkpoint depends on nn only

    if n_classes < 2:
        raise UsageError(f"need at least 2 classes, got {n_classes}")
    if mode not in ("head_only", "all_fc"):
        raise UsageError(f"unknown head mode {mode!r}")
    old_spec = ckpt.spec
    params = list(iter_param_specs(old_spec.layers))
    dense_names = [name for name, l in params if isinstance(l, S.Dense)]
    if not dense_names:
        raise UsageError("network has no dense head to swap")
    head_name = dense_names[-1]
    replace = set(dense_names) if mode == "all_fc" else {head_name}

    if rng is None:
        if n_classes != old_spec.n_classes:
            raise UsageError("changing the class count requires an rng for fresh head init")
        replace = set()  # copy mode

    def rebuild(layers):
        out = []
        for layer in layers:
            if isinstance(layer, S.Residual):
                out.append(S.Residual(tuple(rebuild(layer.branch))))
            else:
                out.append(layer)
        return out

    new_layers = rebuild(old_spec.layers)
    # locate the final dense in the (flat) top-level layer list
    head_top_idx = max(i for i, l in enumerate(new_layers) if isinstance(l, S.Dense))
    head_spec = new_layers[head_top_idx]
    new_layers[head_top_idx] = S.Dense(head_spec.in_features, n_classes)
    new_spec = S.NetworkSpec(
        name=old_spec.name.replace(str(old_spec.n_classes), str(n_classes))
        if str(old_spec.n_classes) in old_spec.name else old_spec.name,
        in_channels=old_spec.in_channels,
        input_length=old_spec.input_length,
        n_classes=n_classes,
        layers=tuple(new_layers),
    ).validate()

    dtype = next(iter(ckpt.arrays.values())).dtype
    new_arrays = {}
    for name, layer in iter_param_specs(new_spec.layers):
        if name in replace:
            w_shape = ((layer.out_features, layer.in_features) if isinstance(layer, S.Dense)
                       else (layer.out_channels, layer.in_channels, layer.kernel_size))
            fan_in = layer.in_features if isinstance(layer, S.Dense) else layer.in_channels * layer.kernel_size
            new_arrays[f"{name}.weights"] = he_init(rng, w_shape, fan_in, dtype)
            new_arrays[f"{name}.bias"] = np.zeros(w_shape[0], dtype=dtype)
        else:
            new_arrays[f"{name}.weights"] = ckpt.arrays[f"{name}.weights"].copy()
            new_arrays[f"{name}.bias"] = ckpt.arrays[f"{name}.bias"].copy()

    metadata = dict(ckpt.metadata)
    metadata["head_swap"] = {"mode": mode if replace else "copy", "n_classes": n_classes}
    return Checkpoint(spec=new_spec, arrays=new_arrays, optimizer=None, metadata=metadata)
