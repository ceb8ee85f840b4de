"""Reproducible random-number streams.

Every stochastic component in this package draws from a counter-based
Philox4x64-10 generator keyed by ``(seed, stream)``.  Philox is stateless
apart from its counter, so a (seed, stream) pair always yields the same
sequence on every platform, and independent streams never overlap.

Stream derivation rules (stable, part of the output contract):

* a plain seed uses stream 0;
* worker ``i`` of a parallel stage uses ``splitmix64(seed XOR i)`` as its
  key low word (stream 0), so workers are decorrelated but the mapping
  from (seed, worker) to a generator is fixed;
* per-frame streams inside an epoch use ``stream = (epoch << 32) | frame``
  so results do not depend on scheduling order or worker count.

Uniform doubles come from ``Generator.random()`` (top 53 bits of one
64-bit Philox word scaled by 2**-53); categorical draws are inverse-CDF
lookups on the cumulative probabilities.  Both are simple enough to
replicate bit-for-bit outside Python.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 mixing step (finalizer constants from the reference)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for (seed, stream); the 128-bit Philox key is stream:seed."""
    key = ((int(stream) & _MASK64) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def worker_seed(seed: int, worker: int) -> int:
    """Derived seed for parallel worker ``worker``: splitmix64(seed XOR worker)."""
    return splitmix64((int(seed) ^ int(worker)) & _MASK64)


def frame_stream(epoch: int, frame_index: int) -> int:
    """Stream id for one frame of one epoch; independent of worker layout."""
    if not (0 <= frame_index < (1 << 32)):
        raise ValueError(f"frame_index out of range: {frame_index}")
    return (int(epoch) << 32) | int(frame_index)
