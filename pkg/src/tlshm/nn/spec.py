"""Layer and network specifications with shape propagation.

Shapes inside the conv trunk are (channels, length) tuples; after Flatten
they become plain feature counts. All output-length arithmetic is floor
mode, which is required for the pool rows to chain consistently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..errors import ShapeError, UsageError


def conv1d_out_len(length: int, kernel: int, stride: int, padding: int) -> int:
    if length + 2 * padding < kernel:
        raise ShapeError(f"conv input length {length} (+2*{padding} pad) shorter than kernel {kernel}")
    return (length + 2 * padding - kernel) // stride + 1


def pool1d_out_len(length: int, kernel: int, stride: int) -> int:
    if length < kernel:
        raise ShapeError(f"pool input length {length} shorter than kernel {kernel}")
    return (length - kernel) // stride + 1


@dataclass(frozen=True)
class Conv1d:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1:
            raise UsageError("conv channel counts must be positive")
        if self.kernel_size < 1 or self.stride < 1 or self.padding < 0:
            raise UsageError("conv kernel/stride must be >= 1 and padding >= 0")


@dataclass(frozen=True)
class MaxPool1d:
    kernel_size: int
    stride: int

    def __post_init__(self):
        if self.kernel_size < 1 or self.stride < 1:
            raise UsageError("pool kernel/stride must be >= 1")


@dataclass(frozen=True)
class Dense:
    in_features: int
    out_features: int

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise UsageError("dense feature counts must be positive")


@dataclass(frozen=True)
class Dropout:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise UsageError(f"dropout p must be in [0, 1), got {self.p}")


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Residual:
    """Identity-skip block: output = input + branch(input).

    The branch must map (channels, length) to the same (channels, length).
    """

    branch: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "branch", tuple(self.branch))


LayerSpec = Union[Conv1d, MaxPool1d, Dense, Dropout, Relu, Flatten, Residual]

_KINDS = {
    Conv1d: "conv1d",
    MaxPool1d: "maxpool1d",
    Dense: "dense",
    Dropout: "dropout",
    Relu: "relu",
    Flatten: "flatten",
    Residual: "residual",
}
_BY_KIND = {v: k for k, v in _KINDS.items()}


def layer_to_dict(layer: LayerSpec) -> dict:
    d = {"kind": _KINDS[type(layer)]}
    if isinstance(layer, Residual):
        d["branch"] = [layer_to_dict(l) for l in layer.branch]
    else:
        for name in layer.__dataclass_fields__:
            d[name] = getattr(layer, name)
    return d


def layer_from_dict(d: dict) -> LayerSpec:
    kind = d.get("kind")
    if kind not in _BY_KIND:
        raise UsageError(f"unknown layer kind {kind!r}")
    cls = _BY_KIND[kind]
    if cls is Residual:
        return Residual(tuple(layer_from_dict(b) for b in d["branch"]))
    kwargs = {k: v for k, v in d.items() if k != "kind"}
    return cls(**kwargs)


def propagate_shape(layer: LayerSpec, shape):
    """Shape of a single layer's output given its input shape.

    `shape` is (channels, length) in the trunk or an int feature count
    after Flatten.
    """
    if isinstance(layer, Conv1d):
        if not isinstance(shape, tuple):
            raise ShapeError("conv layer after flatten")
        c, length = shape
        if c != layer.in_channels:
            raise ShapeError(f"conv expects {layer.in_channels} channels, got {c}")
        return (layer.out_channels, conv1d_out_len(length, layer.kernel_size, layer.stride, layer.padding))
    if isinstance(layer, MaxPool1d):
        if not isinstance(shape, tuple):
            raise ShapeError("pool layer after flatten")
        c, length = shape
        return (c, pool1d_out_len(length, layer.kernel_size, layer.stride))
    if isinstance(layer, Dense):
        if isinstance(shape, tuple):
            raise ShapeError("dense layer before flatten")
        if shape != layer.in_features:
            raise ShapeError(f"dense expects {layer.in_features} features, got {shape}")
        return layer.out_features
    if isinstance(layer, Flatten):
        if not isinstance(shape, tuple):
            raise ShapeError("flatten applied twice")
        c, length = shape
        return c * length
    if isinstance(layer, Residual):
        out = shape
        for sub in layer.branch:
            out = propagate_shape(sub, out)
        if out != shape:
            raise ShapeError(f"residual branch maps {shape} to {out}; identity skip needs matching shapes")
        return shape
    # Relu / Dropout are shape-preserving
    return shape


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    in_channels: int
    input_length: int
    n_classes: int
    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def shape_chain(self):
        """List of (layer, input_shape, output_shape) through the network."""
        shape = (self.in_channels, self.input_length)
        chain = []
        for layer in self.layers:
            out = propagate_shape(layer, shape)
            chain.append((layer, shape, out))
            shape = out
        return chain

    def output_shape(self):
        chain = self.shape_chain()
        return chain[-1][2] if chain else (self.in_channels, self.input_length)

    def validate(self):
        out = self.output_shape()
        if out != self.n_classes:
            raise ShapeError(f"network emits {out} outputs for {self.n_classes} classes")
        return self

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "in_channels": self.in_channels,
            "input_length": self.input_length,
            "n_classes": self.n_classes,
            "layers": [layer_to_dict(l) for l in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            name=d["name"],
            in_channels=d["in_channels"],
            input_length=d["input_length"],
            n_classes=d["n_classes"],
            layers=tuple(layer_from_dict(l) for l in d["layers"]),
        )
