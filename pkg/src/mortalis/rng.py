"""Portable pseudo-random generator for the simulation oracle.

All simulated randomness comes from xoshiro256** streams seeded through
splitmix64, so identical seeds reproduce identical draws on every platform
and in every implementation language.

Constants (Blackman & Vigna reference parameters):

* splitmix64: gamma 0x9E3779B97F4A7C15, mixers 0xBF58476D1CE4E5B9 and
  0x94D049BB133111EB, finisher shifts 30/27/31.
* xoshiro256**: scrambler ``rotl(s1 * 5, 7) * 9``, state update with
  ``t = s1 << 17`` and final ``rotl(s3, 45)``.
* Uniform doubles: top 53 bits, ``(next >> 11) * 2**-53`` in [0, 1).

Stream derivation: replication ``r`` of a run seeded with ``seed`` uses the
xoshiro256** state given by the first four outputs of a splitmix64 stream
whose initial state is ``(seed + r) mod 2**64``. The vectorized lane
generator advances all replication streams in lock-step and is bit-identical
to running the scalar generator per lane, so chunked or parallel execution
cannot change results.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (output, next_state)."""
    state = (state + _GAMMA) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31), state


def mix_seed(value: int) -> int:
    """First splitmix64 output for an arbitrary 64-bit value.

    Used to derive decorrelated sub-stream seeds (e.g. one per synthetic
    year) from a scenario seed.
    """
    out, _ = splitmix64(value & _MASK)
    return out


class Xoshiro256StarStar:
    """Scalar xoshiro256** stream, seeded via splitmix64."""

    def __init__(self, seed: int):
        state = seed & _MASK
        s = []
        for _ in range(4):
            out, state = splitmix64(state)
            s.append(out)
        self._s = s

    def next_uint64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl_int((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl_int(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def next_unit(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_uint64() >> 11) * 2.0**-53


def _rotl_int(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    kk = np.uint64(k)
    return (x << kk) | (x >> (np.uint64(64) - kk))


class XoshiroLanes:
    """Vectorized xoshiro256**: lane ``r`` is the stream for seed ``seed + r``.

    Bit-identical to ``Xoshiro256StarStar(seed + r)`` advanced in the same
    order, whatever the lane count or chunking.
    """

    def __init__(self, seed: int, lanes: int):
        base = np.uint64(seed & _MASK)
        state = base + np.arange(lanes, dtype=np.uint64)  # wraps mod 2**64
        s = np.empty((4, lanes), dtype=np.uint64)
        for i in range(4):
            state = state + np.uint64(_GAMMA)
            z = state.copy()
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            s[i] = z ^ (z >> np.uint64(31))
        self._s = s

    def next_uint64(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = _rotl(s3, 45)
        self._s = np.stack([s0, s1, s2, s3])
        return result

    def next_unit(self) -> np.ndarray:
        """Uniform doubles in [0, 1), one per lane."""
        return (self.next_uint64() >> np.uint64(11)).astype(np.float64) * 2.0**-53
