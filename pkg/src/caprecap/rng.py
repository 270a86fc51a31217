"""Reproducible counter-based random streams.

Every stochastic routine draws from a Philox generator keyed by
(seed, stream index), so any unit of work (a bootstrap replicate, a simulated
realization) owns an independent stream determined solely by the seed and its
index.  Results are therefore identical no matter how work is scheduled
across processes.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 1729

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for stream ``index`` under ``seed``."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def compose_index(major: int, minor: int) -> int:
    """Pack two small indices into one stream index (each below 2^32)."""
    if not 0 <= minor < (1 << 32):
        raise ValueError("minor index out of range")
    return (major << 32) | minor
