"""Transfer learning for vibration-based structural condition identification.

A portal-frame vibration simulator generates labeled acceleration datasets,
a from-scratch 1D CNN is pretrained on them, and layer-freezing transfer
strategies adapt it to data-scarce target domains.
"""

__version__ = "0.1.0"

from . import arch, checkpoint, errors, nn, validation

__all__ = ["arch", "checkpoint", "errors", "nn", "validation", "__version__"]
