"""Counter-based pseudo-random numbers.

Every stochastic quantity in the simulator (channel noise, fading gains,
random interleaver permutations, trial seeds) is a pure function of a
64-bit seed and a counter, so identical configurations reproduce
bit-identical runs on any platform and at any parallelism degree.

The generator is SplitMix64: output(seed, i) = mix64(seed + (i+1)*GOLDEN),
where mix64 is the standard xor-shift/multiply finalizer.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = 0xFFFFFFFFFFFFFFFF

# 2^-53, scales a 53-bit integer into [0, 1)
_DOUBLE_SCALE = 1.0 / (1 << 53)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def raw64(seed: int, start: int, count: int) -> np.ndarray:
    """`count` raw 64-bit words for counters start..start+count-1."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(np.uint64(seed & _U64_MASK) + idx * GOLDEN)


def uniform01(seed: int, start: int, count: int) -> np.ndarray:
    """Doubles in [0, 1), 53-bit resolution."""
    return (raw64(seed, start, count) >> np.uint64(11)).astype(np.float64) * _DOUBLE_SCALE


def gaussian_pairs(seed: int, start: int, npairs: int) -> tuple[np.ndarray, np.ndarray]:
    """2*npairs standard normals via Box-Muller.

    Pair k consumes counters start+2k and start+2k+1, so disjoint counter
    ranges give independent noise regardless of call order.
    """
    u = uniform01(seed, start, 2 * npairs).reshape(npairs, 2)
    # first uniform shifted into (0, 1] so log() is finite
    r = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    return r * np.cos(theta), r * np.sin(theta)


def derive(seed: int, *tags: int | str) -> int:
    """Fold tags into a seed to get an independent substream.

    String tags hash through fnv1a64 first. Used for per-trial and
    per-round seeds: derive(base, scheme_tag, snr_index, trial_index)
    never collides with the noise counters of a different tag path.
    """
    z = np.uint64(seed & _U64_MASK)
    with np.errstate(over="ignore"):
        for t in tags:
            if isinstance(t, str):
                t = fnv1a64(t)
            z = _mix64(z ^ (np.uint64(t & _U64_MASK) + GOLDEN))
    return int(z)


def fnv1a64(text: str) -> int:
    """Stable 64-bit string hash (FNV-1a); used to tag seeds by scheme id."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _U64_MASK
    return h


def permutation(seed: int, n: int) -> np.ndarray:
    """Fisher-Yates permutation of [0, n) driven by the counter stream."""
    perm = np.arange(n, dtype=np.int64)
    if n < 2:
        return perm
    words = raw64(seed, 0, n - 1)
    for i in range(n - 1, 0, -1):
        j = int(words[n - 1 - i] % np.uint64(i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm
