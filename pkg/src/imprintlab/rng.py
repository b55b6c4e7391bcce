"""Deterministic 64-bit PRNG: SplitMix64 seeding xoshiro256** streams.

The whole toolkit draws randomness exclusively from this module so that any
reimplementation (in any language) that follows the same documented rules
reproduces every sampled index, every synthetic dataset, and every report
byte-for-byte.

Documented conventions:
  * a 64-bit seed s is expanded to xoshiro256** state via four successive
    SplitMix64 outputs;
  * substreams are derived by folding integer labels into the seed with the
    SplitMix64 finalizer: s' = mix64(s XOR label), applied left to right;
  * bounded integers use next_u64() % n (the modulo bias is < n / 2**64,
    irrelevant at the scales involved and trivially portable);
  * doubles take the top 53 bits: (next_u64() >> 11) * 2**-53;
  * normal deviates come from Box-Muller pairs, consumed in order;
  * bulk arrays interleave LANES = 256 parallel xoshiro256** streams (lane j
    is seeded from mix64(seed XOR j); element i of the block sequence is
    draw i // LANES of lane i % LANES).  Each lane is an ordinary
    xoshiro256** stream, so the convention ports anywhere; here it lets
    numpy step all lanes at once.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

LANES = 256


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a 64-bit bijective scrambler."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def splitmix64(seed: int):
    """Infinite generator of SplitMix64 outputs for the given seed."""
    state = seed & _MASK64
    while True:
        state = (state + _GOLDEN) & _MASK64
        yield mix64(state)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** 1.0 (Blackman & Vigna), state filled by SplitMix64."""

    __slots__ = ("s",)

    def __init__(self, seed: int):
        sm = splitmix64(seed)
        self.s = [next(sm), next(sm), next(sm), next(sm)]

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def next_below(self, n: int) -> int:
        """Integer in [0, n) via modulo reduction (documented bias)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % n

    def normals(self, count: int) -> np.ndarray:
        """Standard normal deviates via Box-Muller, consumed pairwise."""
        pairs = (count + 1) // 2
        u1 = np.empty(pairs, dtype=np.float64)
        u2 = np.empty(pairs, dtype=np.float64)
        for i in range(pairs):
            # shift into (0, 1] so log() is defined
            u1[i] = ((self.next_u64() >> 11) + 1) * 2.0 ** -53
            u2[i] = (self.next_u64() >> 11) * 2.0 ** -53
        return _box_muller(u1, u2, count)

    def sample_without_replacement(self, population: int, count: int) -> list[int]:
        """Partial Fisher-Yates over [0, population), first `count` slots.

        The pool starts sorted (0, 1, ..., population-1) so results do not
        depend on any external data order.
        """
        if count > population:
            raise ValueError("sample larger than population")
        pool = list(range(population))
        for i in range(count):
            j = i + self.next_below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:count]


def substream(seed: int, *labels: int) -> Xoshiro256StarStar:
    """Derive an independent stream from (seed, labels) deterministically."""
    return Xoshiro256StarStar(fold_seed(seed, *labels))


def fold_seed(seed: int, *labels: int) -> int:
    s = seed & _MASK64
    for label in labels:
        s = mix64(s ^ (label & _MASK64))
    return s


# --- vectorized lane blocks: bulk arrays ------------------------------------

def _lane_states(seed: int) -> np.ndarray:
    states = np.empty((4, LANES), dtype=np.uint64)
    for j in range(LANES):
        sm = splitmix64(mix64((seed ^ j) & _MASK64))
        for w in range(4):
            states[w, j] = next(sm)
    return states


def _step_lanes(s: np.ndarray) -> np.ndarray:
    """One xoshiro256** step across all lanes; returns LANES outputs."""
    x = s[1] * np.uint64(5)
    result = ((x << np.uint64(7)) | (x >> np.uint64(57))) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << np.uint64(45)) | (s[3] >> np.uint64(19))
    return result


def u64_block(seed: int, count: int) -> np.ndarray:
    """First `count` values of the lane-interleaved block sequence."""
    steps = (count + LANES - 1) // LANES
    states = _lane_states(seed)
    out = np.empty(steps * LANES, dtype=np.uint64)
    for i in range(steps):
        out[i * LANES:(i + 1) * LANES] = _step_lanes(states)
    return out[:count]


def normals_block(seed: int, count: int) -> np.ndarray:
    """Standard normals over the block sequence, Box-Muller pairwise."""
    pairs = (count + 1) // 2
    raw = u64_block(seed, 2 * pairs)
    u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
    u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return _box_muller(u1, u2, count)


def _box_muller(u1: np.ndarray, u2: np.ndarray, count: int) -> np.ndarray:
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    z = np.empty(2 * len(u1), dtype=np.float64)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count]
