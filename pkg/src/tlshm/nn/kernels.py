"""Fused single-pass kernels for the memory-bound training hot spots.

Multi-pass numpy expressions dominate the step time on small-cache
machines, so pooling, gradient scatter, dropout masking, relu, and the
Adam update are single-pass numba kernels. Determinism: prange only runs
over indices whose writes are disjoint, every accumulation happens in a
fixed serial order inside one thread, and fastmath stays off, so results
are bitwise reproducible for any thread count.
"""

import numpy as np
import numba
from numba import njit, prange

numba.config.THREADING_LAYER = "omp"


@njit(parallel=True, fastmath=False, cache=True)
def maxpool_forward(x, y, idx, kernel, stride):
    b, c, _ = x.shape
    out_len = y.shape[2]
    for bc in prange(b * c):
        i = bc // c
        j = bc % c
        for o in range(out_len):
            base = o * stride
            best = x[i, j, base]
            bi = 0
            for k in range(1, kernel):
                v = x[i, j, base + k]
                if v > best:  # strict: ties keep the lowest index
                    best = v
                    bi = k
            y[i, j, o] = best
            idx[i, j, o] = bi


@njit(parallel=True, fastmath=False, cache=True)
def maxpool_backward(grad_out, idx, grad_x, stride):
    b, c, out_len = grad_out.shape
    for bc in prange(b * c):
        i = bc // c
        j = bc % c
        for p in range(grad_x.shape[2]):
            grad_x[i, j, p] = 0.0
        for o in range(out_len):
            grad_x[i, j, o * stride + idx[i, j, o]] += grad_out[i, j, o]


@njit(parallel=True, fastmath=False, cache=True)
def im2col(xp, cols, kernel, stride):
    """xp (b, c, lp) -> cols (b, out_len, c, kernel)."""
    b, c, _ = xp.shape
    out_len = cols.shape[1]
    for bo in prange(b * out_len):
        i = bo // out_len
        o = bo % out_len
        base = o * stride
        for j in range(c):
            for k in range(kernel):
                cols[i, o, j, k] = xp[i, j, base + k]


@njit(parallel=True, fastmath=False, cache=True)
def col2im_add(grad_cols, grad_xp, kernel, stride):
    """Scatter-add cols gradient (b, out_len, c, kernel) into (b, c, lp)."""
    b, _, c, _ = grad_cols.shape
    out_len = grad_cols.shape[1]
    for bc in prange(b * c):
        i = bc // c
        j = bc % c
        for p in range(grad_xp.shape[2]):
            grad_xp[i, j, p] = 0.0
        for o in range(out_len):
            base = o * stride
            for k in range(kernel):
                grad_xp[i, j, base + k] += grad_cols[i, o, j, k]


@njit(parallel=True, fastmath=False, cache=True)
def relu_forward(x, y, mask):
    xf = x.reshape(-1)
    yf = y.reshape(-1)
    mf = mask.reshape(-1)
    for i in prange(xf.size):
        on = xf[i] > 0.0
        mf[i] = on
        yf[i] = xf[i] if on else 0.0


@njit(parallel=True, fastmath=False, cache=True)
def masked_grad(grad_out, mask, grad_in):
    g = grad_out.reshape(-1)
    m = mask.reshape(-1)
    o = grad_in.reshape(-1)
    for i in prange(g.size):
        o[i] = g[i] if m[i] else 0.0


@njit(parallel=True, fastmath=False, cache=True)
def dropout_forward(x, u, p, scale, y, mask):
    xf = x.reshape(-1)
    uf = u.reshape(-1)
    yf = y.reshape(-1)
    mf = mask.reshape(-1)
    for i in prange(xf.size):
        if uf[i] >= p:
            mf[i] = scale
            yf[i] = xf[i] * scale
        else:
            mf[i] = 0.0
            yf[i] = 0.0


@njit(parallel=True, fastmath=False, cache=True)
def scale_grad(grad_out, mask, grad_in):
    g = grad_out.reshape(-1)
    m = mask.reshape(-1)
    o = grad_in.reshape(-1)
    for i in prange(g.size):
        o[i] = g[i] * m[i]


@njit(parallel=True, fastmath=False, cache=True)
def adam_update(theta, grad, m, v, beta1, beta2, eps, step_size):
    for i in prange(theta.size):
        g = grad[i]
        mi = beta1 * m[i] + (1.0 - beta1) * g
        vi = beta2 * v[i] + (1.0 - beta2) * g * g
        m[i] = mi
        v[i] = vi
        theta[i] -= step_size * mi / (np.sqrt(vi) + eps)
