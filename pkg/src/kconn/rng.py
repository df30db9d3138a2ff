"""Counter-keyed random substreams.

Generator identity: xoshiro256** whose 256-bit state is filled by SplitMix64
starting from ``mix(seed, stream)``.  Every layer, trial or worker owns the
stream ``(seed, index)``, so results never depend on scheduling order.

All functions here are numba-compiled; state is a ``uint64[4]`` array.
"""

from __future__ import annotations

import numba as nb
import numpy as np

GENERATOR_ID = "xoshiro256**/splitmix64-keyed(seed,stream)"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@nb.njit(cache=True)
def splitmix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def seed_state(state, seed, stream):
    """Fill ``state`` for substream ``stream`` of master ``seed``."""
    z = splitmix64(np.uint64(seed)) ^ splitmix64(np.uint64(stream) * _GOLDEN + np.uint64(1))
    for i in range(4):
        z = splitmix64(z)
        state[i] = z
    if state[0] == 0 and state[1] == 0 and state[2] == 0 and state[3] == 0:
        state[0] = np.uint64(1)


@nb.njit(cache=True)
def next_u64(state):
    result = _rotl(state[1] * np.uint64(5), 7) * np.uint64(9)
    t = state[1] << np.uint64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], 45)
    return result


@nb.njit(cache=True)
def uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(next_u64(state) >> np.uint64(11)) * _TWO53


@nb.njit(cache=True)
def uniform_open(state):
    """Uniform double in (0, 1]; safe to take the log of."""
    return (float(next_u64(state) >> np.uint64(11)) + 1.0) * _TWO53


@nb.njit(cache=True)
def below(state, bound):
    """Unbiased integer in [0, bound) by rejection (Lemire-style threshold)."""
    b = np.uint64(bound)
    threshold = (np.uint64(0) - b) % b
    while True:
        r = next_u64(state)
        if r >= threshold:
            return np.int64(r % b)


def make_state(seed: int, stream: int) -> np.ndarray:
    state = np.zeros(4, dtype=np.uint64)
    seed_state(state, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream & 0xFFFFFFFFFFFFFFFF))
    return state


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit child seed from a tuple of nonnegative ints."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])
