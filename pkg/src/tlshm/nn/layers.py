"""Runtime layers: forward passes with caching, exact backward passes.

Convolution uses the cross-correlation convention (no kernel flip) via
im2col + one flat GEMM. Max pooling is floor mode with ties broken toward
the lowest index. All parameterized layers carry a `frozen` flag honored
by the optimizer.

GEMMs go through BLAS; everything memory-bound runs as fused single-pass
kernels (see kernels.py). Layers keep reusable output/scratch buffers:
large fresh allocations page-fault on every training step, which costs
more than the arithmetic. Buffers are only valid until the next
forward/backward call, matching how the training loop consumes them.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError, UsageError
from . import kernels as K
from . import spec as S


def he_init(rng, shape, fan_in, dtype):
    """Fan-in-scaled Gaussian init (variance 2/fan_in), drawn in float64."""
    w = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
    return w.astype(dtype)


class Layer:
    has_params = False

    def forward(self, x, training=False, rng=None):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def _buf(self, name, shape, dtype):
        buf = getattr(self, name, None)
        if buf is None or buf.shape != shape or buf.dtype != dtype:
            buf = np.empty(shape, dtype=dtype)
            setattr(self, name, buf)
        return buf


class Conv1dLayer(Layer):
    has_params = True

    def __init__(self, layer_spec: S.Conv1d, rng, dtype):
        self.spec = layer_spec
        c_in, c_out, k = layer_spec.in_channels, layer_spec.out_channels, layer_spec.kernel_size
        self.weights = he_init(rng, (c_out, c_in, k), c_in * k, dtype)
        self.bias = np.zeros(c_out, dtype=dtype)
        self.frozen = False
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    def forward(self, x, training=False, rng=None):
        sp = self.spec
        b, c, length = x.shape
        if c != sp.in_channels:
            raise ShapeError(f"conv expects {sp.in_channels} channels, got {c}")
        if length + 2 * sp.padding < sp.kernel_size:
            raise ShapeError(f"conv input length {length} shorter than kernel {sp.kernel_size}")
        if sp.padding:
            xp = self._buf("_xp", (b, c, length + 2 * sp.padding), x.dtype)
            xp[:, :, :sp.padding] = 0
            xp[:, :, sp.padding + length:] = 0
            xp[:, :, sp.padding:sp.padding + length] = x
        else:
            xp = np.ascontiguousarray(x)
        out_len = S.conv1d_out_len(length, sp.kernel_size, sp.stride, sp.padding)
        cols = self._buf("_cols", (b, out_len, c, sp.kernel_size), x.dtype)
        K.im2col(xp, cols, sp.kernel_size, sp.stride)
        cols2 = cols.reshape(b * out_len, c * sp.kernel_size)
        w_mat = self.weights.reshape(sp.out_channels, -1)
        yt = self._buf("_yt", (b * out_len, sp.out_channels), x.dtype)
        np.matmul(cols2, w_mat.T, out=yt)
        yt += self.bias
        y = self._buf("_y", (b, sp.out_channels, out_len), x.dtype)
        np.copyto(y, yt.reshape(b, out_len, sp.out_channels).transpose(0, 2, 1))
        self._cache = (cols2, x.shape, xp.shape, out_len)
        return y

    def backward(self, grad_out):
        if self._cache is None:
            raise UsageError("conv backward called without a cached forward pass")
        sp = self.spec
        cols2, x_shape, xp_shape, out_len = self._cache
        b = x_shape[0]
        g = self._buf("_g", (b, out_len, sp.out_channels), grad_out.dtype)
        np.copyto(g, grad_out.transpose(0, 2, 1))
        g2 = g.reshape(b * out_len, sp.out_channels)
        self.grad_bias = self._buf("_gb", self.bias.shape, self.bias.dtype)
        np.sum(g2, axis=0, out=self.grad_bias)
        gw = self._buf("_gw", self.weights.shape, self.weights.dtype)
        np.matmul(g2.T, cols2, out=gw.reshape(sp.out_channels, -1))
        self.grad_weights = gw
        grad_cols = self._buf("_gcols", (b, out_len, sp.in_channels, sp.kernel_size), grad_out.dtype)
        np.matmul(g2, self.weights.reshape(sp.out_channels, -1),
                  out=grad_cols.reshape(b * out_len, sp.in_channels * sp.kernel_size))
        grad_xp = self._buf("_gxp", xp_shape, grad_out.dtype)
        K.col2im_add(grad_cols, grad_xp, sp.kernel_size, sp.stride)
        if sp.padding:
            return grad_xp[:, :, sp.padding:sp.padding + x_shape[2]]
        return grad_xp


class MaxPool1dLayer(Layer):
    def __init__(self, layer_spec: S.MaxPool1d):
        self.spec = layer_spec
        self._cache = None

    def forward(self, x, training=False, rng=None):
        sp = self.spec
        b, c, length = x.shape
        if length < sp.kernel_size:
            raise ShapeError(f"pool input length {length} shorter than kernel {sp.kernel_size}")
        out_len = S.pool1d_out_len(length, sp.kernel_size, sp.stride)
        y = self._buf("_y", (b, c, out_len), x.dtype)
        idx = self._buf("_idx", (b, c, out_len), np.int8)
        K.maxpool_forward(np.ascontiguousarray(x), y, idx, sp.kernel_size, sp.stride)
        self._cache = (idx, x.shape, out_len)
        return y

    def backward(self, grad_out):
        if self._cache is None:
            raise UsageError("pool backward called without a cached forward pass")
        sp = self.spec
        idx, x_shape, out_len = self._cache
        grad_x = self._buf("_gx", x_shape, grad_out.dtype)
        K.maxpool_backward(np.ascontiguousarray(grad_out), idx, grad_x, sp.stride)
        return grad_x


class DenseLayer(Layer):
    has_params = True

    def __init__(self, layer_spec: S.Dense, rng, dtype):
        self.spec = layer_spec
        self.weights = he_init(rng, (layer_spec.out_features, layer_spec.in_features),
                               layer_spec.in_features, dtype)
        self.bias = np.zeros(layer_spec.out_features, dtype=dtype)
        self.frozen = False
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    def forward(self, x, training=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.spec.in_features:
            raise ShapeError(f"dense expects (batch, {self.spec.in_features}), got {x.shape}")
        self._cache = x
        y = self._buf("_y", (x.shape[0], self.spec.out_features), x.dtype)
        np.matmul(x, self.weights.T, out=y)
        y += self.bias
        return y

    def backward(self, grad_out):
        if self._cache is None:
            raise UsageError("dense backward called without a cached forward pass")
        x = self._cache
        gw = self._buf("_gw", self.weights.shape, self.weights.dtype)
        np.matmul(grad_out.T, x, out=gw)
        self.grad_weights = gw
        gb = self._buf("_gb", self.bias.shape, self.bias.dtype)
        np.sum(grad_out, axis=0, out=gb)
        self.grad_bias = gb
        gx = self._buf("_gx", x.shape, grad_out.dtype)
        np.matmul(grad_out, self.weights, out=gx)
        return gx


class DropoutLayer(Layer):
    def __init__(self, layer_spec: S.Dropout):
        self.spec = layer_spec
        self._mask = None

    def forward(self, x, training=False, rng=None):
        p = self.spec.p
        if not training or p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise UsageError("dropout in training mode needs an rng")
        u = self._buf("_u", x.shape, np.float32)
        rng.random(dtype=np.float32, out=u)
        mask = self._buf("_m", x.shape, x.dtype)
        y = self._buf("_y", x.shape, x.dtype)
        K.dropout_forward(np.ascontiguousarray(x), u, np.float32(p),
                          x.dtype.type(1.0 / (1.0 - p)), y, mask)
        self._mask = mask
        return y

    def backward(self, grad_out):
        if self._mask is None:
            return grad_out
        y = self._buf("_gy", grad_out.shape, grad_out.dtype)
        K.scale_grad(np.ascontiguousarray(grad_out), self._mask, y)
        return y


class ReluLayer(Layer):
    def __init__(self, layer_spec: S.Relu):
        self.spec = layer_spec
        self._cache = None

    def forward(self, x, training=False, rng=None):
        mask = self._buf("_m", x.shape, np.bool_)
        y = self._buf("_y", x.shape, x.dtype)
        K.relu_forward(np.ascontiguousarray(x), y, mask)
        self._cache = mask
        return y

    def backward(self, grad_out):
        if self._cache is None:
            raise UsageError("relu backward called without a cached forward pass")
        y = self._buf("_gy", grad_out.shape, grad_out.dtype)
        K.masked_grad(np.ascontiguousarray(grad_out), self._cache, y)
        return y


class FlattenLayer(Layer):
    def __init__(self, layer_spec: S.Flatten):
        self.spec = layer_spec
        self._shape = None

    def forward(self, x, training=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        if self._shape is None:
            raise UsageError("flatten backward called without a cached forward pass")
        return grad_out.reshape(self._shape)


class ResidualLayer(Layer):
    def __init__(self, layer_spec: S.Residual, rng, dtype):
        self.spec = layer_spec
        self.branch = [build_layer(sub, rng, dtype) for sub in layer_spec.branch]

    def forward(self, x, training=False, rng=None):
        # the skip needs the original x after the branch ran, so keep a copy:
        # branch layers reuse buffers and x may alias an upstream buffer
        x_in = self._buf("_x", x.shape, x.dtype)
        np.copyto(x_in, x)
        out = x
        for layer in self.branch:
            out = layer.forward(out, training=training, rng=rng)
        if out.shape != x_in.shape:
            raise ShapeError(f"residual branch output {out.shape} does not match input {x_in.shape}")
        y = self._buf("_y", x_in.shape, x.dtype)
        np.add(x_in, out, out=y)
        return y

    def backward(self, grad_out):
        g = grad_out
        gskip = self._buf("_gskip", grad_out.shape, grad_out.dtype)
        np.copyto(gskip, grad_out)
        for layer in reversed(self.branch):
            g = layer.backward(g)
        y = self._buf("_gy", grad_out.shape, grad_out.dtype)
        np.add(gskip, g, out=y)
        return y


def build_layer(layer_spec, rng, dtype):
    if isinstance(layer_spec, S.Conv1d):
        return Conv1dLayer(layer_spec, rng, dtype)
    if isinstance(layer_spec, S.MaxPool1d):
        return MaxPool1dLayer(layer_spec)
    if isinstance(layer_spec, S.Dense):
        return DenseLayer(layer_spec, rng, dtype)
    if isinstance(layer_spec, S.Dropout):
        return DropoutLayer(layer_spec)
    if isinstance(layer_spec, S.Relu):
        return ReluLayer(layer_spec)
    if isinstance(layer_spec, S.Flatten):
        return FlattenLayer(layer_spec)
    if isinstance(layer_spec, S.Residual):
        return ResidualLayer(layer_spec, rng, dtype)
    raise UsageError(f"unknown layer spec {layer_spec!r}")
