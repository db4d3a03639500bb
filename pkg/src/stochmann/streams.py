"""Counter-based pseudo-random streams.

Every random quantity in this package is a pure function of a 64-bit key
and a counter, so draws can be generated in any order, in any batch shape,
on any number of workers, and still be bitwise identical to a serial run.
The core primitive is the Philox-2x64 block cipher (10 rounds) applied to
the counter pair ``(block, index)`` under a per-stream key; uniform and
Gaussian variates are derived from its output deterministically.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Philox-2x64 round constants (multiplier and Weyl key increment).
_PHILOX_M = np.uint64(0xD2B74407B1CE6E93)
_PHILOX_W = np.uint64(0x9E3779B97F4A7C15)
_ROUNDS = 10

_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)

__all__ = [
    "mix64",
    "philox2x64",
    "substream_uniforms",
    "substream_normals",
    "derive_key",
]


def _as_u64(x):
    """Coerce ints/arrays to uint64, reducing Python ints mod 2**64."""
    if isinstance(x, (int, np.integer)):
        return np.uint64(int(x) & 0xFFFFFFFFFFFFFFFF)
    return np.asarray(x, dtype=np.uint64)


def _mulhilo(b):
    """Full 128-bit product of the Philox multiplier with b, as (hi, lo)."""
    a_lo = _PHILOX_M & _MASK32
    a_hi = _PHILOX_M >> _SH32
    b_lo = b & _MASK32
    b_hi = b >> _SH32
    lo = _PHILOX_M * b
    # 32x32 partial products; each intermediate stays below 2**64.
    t = a_hi * b_lo + ((a_lo * b_lo) >> _SH32)
    mid = a_lo * b_hi + (t & _MASK32)
    hi = a_hi * b_hi + (t >> _SH32) + (mid >> _SH32)
    return hi, lo


def philox2x64(c0, c1, key, rounds=_ROUNDS):
    """Apply the Philox-2x64 bijection to counter (c0, c1) under key.

    Inputs broadcast together; returns two uint64 arrays of the broadcast
    shape.  Distinct (c0, c1, key) triples give statistically independent
    outputs, which is what makes draw-by-counter streams sound.
    """
    with np.errstate(over="ignore"):
        c0 = _as_u64(c0) + np.uint64(0)  # force array semantics
        c1 = _as_u64(c1) + np.uint64(0)
        k = _as_u64(key) + np.uint64(0)
        for _ in range(rounds):
            hi, lo = _mulhilo(c0)
            c0 = hi ^ c1 ^ k
            c1 = lo
            k = k + _PHILOX_W
    return c0, c1


def mix64(x):
    """SplitMix64 finalizer; a bijection on uint64 used to spread keys."""
    with np.errstate(over="ignore"):
        z = _as_u64(x) + np.uint64(0)
        z = z ^ (z >> np.uint64(30))
        z = z * np.uint64(0xBF58476D1CE4E5B9)
        z = z ^ (z >> np.uint64(27))
        z = z * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def derive_key(seed, salt=0):
    """Injective-per-salt key derivation: mix64(seed + (salt+1)*W).

    For a fixed seed the map salt -> key is injective on [0, 2**64), so
    replica substreams never collide.
    """
    with np.errstate(over="ignore"):
        s = _as_u64(seed) + (_as_u64(salt) + np.uint64(1)) * _PHILOX_W
    return mix64(s)


def _u64_to_unit(x):
    """Map uint64 to the open interval (0, 1), symmetric around 1/2."""
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def substream_uniforms(key, index, count):
    """``count`` uniforms on (0,1) from substream (key, index).

    key and index may be scalars or arrays (they broadcast); the result has
    the broadcast shape plus a trailing axis of length ``count``.  Entry j
    depends only on (key, index, j): the counter word c1 carries the index,
    c0 enumerates output blocks of two.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    key = _as_u64(key)
    index = _as_u64(index)
    shape = np.broadcast_shapes(np.shape(key), np.shape(index))
    nblocks = (count + 1) // 2
    c0 = np.arange(nblocks, dtype=np.uint64).reshape((1,) * len(shape) + (nblocks,))
    c1 = np.broadcast_to(np.asarray(index), shape)[..., None]
    k = np.broadcast_to(np.asarray(key), shape)[..., None]
    x0, x1 = philox2x64(c0, c1, k)
    out = np.empty(shape + (2 * nblocks,), dtype=np.float64)
    out[..., 0::2] = _u64_to_unit(x0)
    out[..., 1::2] = _u64_to_unit(x1)
    return out[..., :count]


def substream_normals(key, index, count):
    """Standard normal variates via the inverse CDF; same stream layout
    as substream_uniforms, so the draws stay pure in (key, index, j)."""
    return ndtri(substream_uniforms(key, index, count))
