"""Online Gaussian augmentation: fresh noise on every call."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError


@dataclass
class Batch:
    inputs: np.ndarray   # (batch, channels, length)
    labels: np.ndarray   # (batch,) class indices

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise UsageError(f"{self.inputs.shape[0]} inputs vs {self.labels.shape[0]} labels")


def add_relative_noise(x, fraction, rng):
    """x + N(0, (fraction * rms(record))^2), noise drawn per record.

    fraction 0 returns the input unchanged (bitwise). The rms is computed
    over everything but the leading record axis.
    """
    if fraction < 0:
        raise UsageError(f"noise fraction must be >= 0, got {fraction}")
    if fraction == 0:
        return x
    axes = tuple(range(1, x.ndim))
    rms = np.sqrt(np.mean(np.square(x, dtype=np.float64), axis=axes, keepdims=True))
    sigma = (fraction * rms).astype(x.dtype)
    dtype = x.dtype if x.dtype in (np.float32, np.float64) else np.float64
    noise = rng.standard_normal(x.shape, dtype=dtype).astype(x.dtype, copy=False)
    return x + noise * sigma


def augment_gaussian(batch: Batch, fraction, rng) -> Batch:
    """Batch copy with per-record relative Gaussian noise on the inputs."""
    return Batch(inputs=add_relative_noise(batch.inputs, fraction, rng), labels=batch.labels)
