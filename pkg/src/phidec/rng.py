"""Seedable pseudo-random streams usable from both Python and jitted kernels.

The generator is xoshiro256++ with splitmix64 state expansion.  State lives in
a plain uint64[4] array so the same stream can be advanced inside nopython
kernels; trajectories are bit-for-bit reproducible for a given seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


@njit(cache=True, nogil=True)
def seed_state(state, seed):
    """Fill a uint64[4] state array from a single integer seed (splitmix64)."""
    z = _U64(seed)
    for i in range(4):
        z = z + _U64(0x9E3779B97F4A7C15)
        w = z
        w = (w ^ (w >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        w = (w ^ (w >> _U64(27))) * _U64(0x94D049BB133111EB)
        state[i] = w ^ (w >> _U64(31))


@njit(cache=True, nogil=True, inline="always")
def next_u64(state):
    result = _rotl(state[0] + state[3], 23) + state[0]
    t = state[1] << _U64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], 45)
    return result


@njit(cache=True, nogil=True, inline="always")
def uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(state) >> _U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True, inline="always")
def below(state, n):
    """Uniform integer in [0, n).  Bias is O(n / 2**53), negligible here."""
    return int(uniform(state) * n)


@njit(cache=True, nogil=True, inline="always")
def geometric_gap(state, log1m_p):
    """Number of Bernoulli(p) failures before the next success.

    `log1m_p` is log(1 - p).  Used for gap-sampling sparse flips: equivalent
    in distribution to scanning sites one by one.
    """
    u = uniform(state)
    return int(np.log(1.0 - u) / log1m_p)


class Xoshiro:
    """Python-side handle on a kernel-compatible random stream."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.state = np.empty(4, dtype=np.uint64)
        seed_state(self.state, _U64(self.seed & 0xFFFFFFFFFFFFFFFF))

    def uniform(self) -> float:
        return uniform(self.state)

    def below(self, n: int) -> int:
        return below(self.state, n)

    def copy(self) -> "Xoshiro":
        other = Xoshiro.__new__(Xoshiro)
        other.seed = self.seed
        other.state = self.state.copy()
        return other

    def __repr__(self):
        return f"Xoshiro(seed={self.seed})"
