"""Worker/thread caps, controlled by the TLSHM_THREADS environment variable.

Training alternates small GEMMs with fused elementwise kernels; letting
BLAS and the kernel runtime each spin their own pools oversubscribes the
machine and more than doubles step time. Default is therefore 1 thread per
pool; TLSHM_THREADS raises the cap for every kind of internal parallelism
(compute threads here, process workers in dataset generation).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numba
from threadpoolctl import threadpool_limits


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("TLSHM_THREADS", "")
    try:
        n = int(raw) if raw else default
    except ValueError:
        n = default
    return max(1, min(n, os.cpu_count() or 1))


def configure_numba() -> None:
    numba.set_num_threads(worker_count())


@contextmanager
def compute_threads():
    """Cap BLAS pools for a compute-heavy section."""
    configure_numba()
    with threadpool_limits(limits=worker_count()):
        yield
