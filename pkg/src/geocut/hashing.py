"""Seeded hashing primitives shared by every sketch.

All randomness in the library is derived deterministically from 64-bit
seeds via the splitmix64 mixer, so that a scalar sketch and its
vectorized bank counterpart compute bit-identical hash values.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MERSENNE61 = (1 << 61) - 1

# Fingerprint values live in [1, 2^31 - 2] so that weighted sums of a few
# thousand of them stay well inside int64.
FINGERPRINT_MOD = (1 << 31) - 1


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive(seed: int, *path: int) -> int:
    """Derive a child seed from a master seed and an integer path."""
    x = seed & MASK64
    for step in path:
        x = splitmix64(x ^ ((step * GOLDEN) & MASK64))
    return x


def item_hash(seed: int, item: int) -> int:
    """64-bit hash of an item under a given derived seed."""
    return splitmix64(seed ^ ((item * GOLDEN) & MASK64))


def trailing_zeros64(x: int) -> int:
    if x == 0:
        return 64
    return (x & -x).bit_length() - 1


# --- numpy counterparts (uint64 arithmetic wraps, matching the scalar path) ---

_NP_GOLDEN = np.uint64(GOLDEN)
_NP_M1 = np.uint64(0xBF58476D1CE4E5B9)
_NP_M2 = np.uint64(0x94D049BB133111EB)


def np_splitmix64(x: np.ndarray) -> np.ndarray:
    # callers pass arrays of ndim >= 1; numpy only warns about uint64
    # wraparound on 0-d operands
    x = (x + _NP_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * _NP_M1
    x = (x ^ (x >> np.uint64(27))) * _NP_M2
    return x ^ (x >> np.uint64(31))


def np_item_hash(seeds: np.ndarray, item: int) -> np.ndarray:
    mixed = np.uint64((item * GOLDEN) & MASK64)
    return np_splitmix64(seeds ^ mixed)


def np_derive(x, *steps):
    """Vectorized derive(): each step may be a scalar or a broadcastable
    uint64 array; matches the scalar chain bit for bit."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for step in steps:
            step_arr = (np.asarray(step, dtype=np.uint64) * _NP_GOLDEN)
            x = np_splitmix64(x ^ step_arr)
    return x


def np_trailing_zeros64(x: np.ndarray) -> np.ndarray:
    out = np.full(x.shape, 64, dtype=np.int64)
    nz = x != 0
    low = x[nz] & (np.uint64(0) - x[nz])
    # low bits are exact powers of two; log2 on float64 is exact for them
    out[nz] = np.log2(low.astype(np.float64)).astype(np.int64)
    return out


class PairwiseHash:
    """Pairwise-independent hash into [buckets], as a degree-1 polynomial
    over the Mersenne-prime field GF(2^61 - 1).

    For distinct keys x != y, Pr[h(x) = h(y)] <= 1/buckets + O(2^-61).
    """

    def __init__(self, buckets: int, seed: int):
        if buckets < 1:
            raise ValueError("buckets must be >= 1")
        self.buckets = buckets
        self.a = derive(seed, 1) % (MERSENNE61 - 1) + 1
        self.b = derive(seed, 2) % MERSENNE61

    def __call__(self, x: int) -> int:
        return ((self.a * x + self.b) % MERSENNE61) % self.buckets
