"""Deterministic randomness for parallel-safe perturbation.

Two constructions live here:

* a stateless counter-based hash (SplitMix64 finalizer chained over key
  components) that yields the per-cell uniforms used by the perturbation
  engine -- the value for cell (i, j) depends only on (seed, i, j, substream),
  never on evaluation order or worker count;
* keyed Philox streams for operations that need a stateful generator
  (pool draws, pair-rank rejection sampling, partition shuffles), one
  independent stream per (seed, path) so records and partitions can be
  processed in any order.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Lane multipliers keep (i, j, substream) contributions from aliasing.
_LANE = (
    0xD6E8FEB86659FD93,
    0xA5A5B4C2D91F0347,
    0x8CB92BA72F3D8DD7,
    0x9E6C63D0876A9A4F,
)

# Substream tags, disjoint per use so e.g. the q-coin and the donor index
# of one cell never share a stream.
COIN = 1
DONOR = 2
POOL = 3
PAIRS = 4
SHUFFLE = 5
PARTITION = 6
SPLIT = 7
DATA = 8
STUDY = 9

_INV_2_53 = 1.0 / float(1 << 53)


def _mix(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit python int."""
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def hash64(seed: int, *path: int) -> int:
    """Hash (seed, *path) to a 64-bit integer."""
    h = _mix((int(seed) + _GOLDEN) & _MASK)
    for lane, component in enumerate(path):
        c = (int(component) * _LANE[lane % len(_LANE)] + _GOLDEN) & _MASK
        h = _mix(h ^ c)
    return h


def uniform(seed: int, *path: int) -> float:
    """One uniform [0, 1) draw keyed by (seed, *path)."""
    return (hash64(seed, *path) >> 11) * _INV_2_53


def cell_uniforms(seed: int, n: int, p: int, substream: int) -> np.ndarray:
    """n x p matrix of uniforms, entry (i, j) keyed by (seed, i, j, substream).

    Vectorized twin of uniform(seed, i, j, substream); the two agree bit-exactly.
    """
    u64 = np.uint64
    rows = np.arange(n, dtype=np.uint64)[:, None]
    cols = np.arange(p, dtype=np.uint64)[None, :]

    def mix(z):
        z = (z ^ (z >> u64(30))) * u64(_MIX1)
        z = (z ^ (z >> u64(27))) * u64(_MIX2)
        return z ^ (z >> u64(31))

    h = u64(_mix((int(seed) + _GOLDEN) & _MASK))
    h = mix(h ^ (rows * u64(_LANE[0]) + u64(_GOLDEN)))
    h = mix(h ^ (cols * u64(_LANE[1]) + u64(_GOLDEN)))
    h = mix(h ^ u64((int(substream) * _LANE[2] + _GOLDEN) & _MASK))
    return (h >> u64(11)).astype(np.float64) * _INV_2_53


def derive_seed(seed: int, *path: int) -> int:
    """A 64-bit child seed for a nested deterministic computation."""
    return hash64(seed, *path)


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox generator keyed by (seed, *path)."""
    key = (hash64(seed, *path, 0xA1) << 64) | hash64(seed, *path, 0xB2)
    return np.random.Generator(np.random.Philox(key=key))
