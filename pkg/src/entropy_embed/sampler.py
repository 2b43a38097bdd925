"""Lane-parallel LCG and rejection sampling of non-edge partners.

Every lane runs its own 32-bit LCG ``state <- 1103515245 * state + 1``. A
draw splices the low 23 state bits into a binary32 significand with
exponent 0 (a value in [1, 2)) and maps it onto ``0..n-1`` as
``trunc(f*n - n)``. Lanes whose candidate is a possible edge or the anchor
itself are redrawn; lanes that already hold a verified non-edge are frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import CapabilityError, SamplingError
from .graph import LCG_MULTIPLIER, EdgeHashSet, hash_pair_jit

MANTISSA_BITS = 23
MAX_FLOAT_INDEX_N = 1 << MANTISSA_BITS
MAX_TRIES = 10_000
_M32 = 0xFFFFFFFF
_M64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


@njit(cache=True, inline="always")
def splitmix64_jit(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def stream_seed(seed_key, round_idx, edge, side):
    """32-bit start state of the stream drawing partners for one edge end in one round."""
    x = splitmix64_jit(seed_key + np.uint64(round_idx))
    x = splitmix64_jit(x + np.uint64(2) * np.uint64(edge) + np.uint64(side))
    return x & np.uint64(_M32)


def seed_key(seed: int) -> int:
    return splitmix64(seed & _M64)


@njit(cache=True, inline="always")
def lcg_next(state):
    return (state * np.uint64(LCG_MULTIPLIER) + np.uint64(1)) & np.uint64(_M32)


@njit(cache=True, inline="always")
def uniform_index_jit(word, n):
    if n > MAX_FLOAT_INDEX_N:
        return np.int64(word % np.uint64(n))
    # exactly the binary32 value with significand bits (word & 0x7fffff) and exponent 0
    f = np.float32(1.0 + np.float64(word & np.uint64(0x7FFFFF)) * 2.0**-23)
    nf = np.float32(n)
    x = np.float32(np.float32(f * nf) - nf)
    idx = np.int64(x)
    if idx >= n:
        idx = n - 1
    return idx


@dataclass
class LaneRng:
    state: np.ndarray  # uint32, one LCG per lane

    @classmethod
    def from_seed(cls, seed: int, lanes: int = 16) -> "LaneRng":
        key = seed_key(seed)
        words: list[int] = []
        salt = 0
        while len(words) < lanes:
            w = splitmix64((key + salt) & _M64) & _M32
            if w not in words:
                words.append(w)
            salt += 1
        return cls(np.array(words, dtype=np.uint32))

    @property
    def lanes(self) -> int:
        return int(self.state.size)


def lcg_step(rng: LaneRng) -> LaneRng:
    """Advance every lane once; returns a new generator."""
    s = rng.state.astype(np.uint64)
    return LaneRng(((s * np.uint64(LCG_MULTIPLIER) + np.uint64(1)) & np.uint64(_M32)).astype(np.uint32))


def lane_uniform_index(state_word: int, n: int, strict: bool = False) -> int:
    """Map a 32-bit state word to a vertex index in ``[0, n-1]``.

    For ``n > 2**23`` the mantissa trick cannot reach every vertex; the
    word is then reduced modulo ``n`` instead (or, with ``strict=True``, a
    :class:`CapabilityError` is raised).
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_FLOAT_INDEX_N:
        if strict:
            raise CapabilityError(f"n={n} exceeds the 2**23 range of the mantissa trick")
        return int(state_word) % n
    bits = np.array([0x3F800000 | (int(state_word) & 0x7FFFFF)], dtype=np.uint32)
    f = bits.view(np.float32)[0]
    x = f * np.float32(n) - np.float32(n)
    return min(int(x), n - 1)


def lane_uniform_indices(words, n: int) -> np.ndarray:
    """Vectorised :func:`lane_uniform_index` for an array of state words."""
    words = np.asarray(words, dtype=np.uint64)
    if n > MAX_FLOAT_INDEX_N:
        return (words % np.uint64(n)).astype(np.int64)
    bits = (np.uint64(0x3F800000) | (words & np.uint64(0x7FFFFF))).astype(np.uint32)
    nf = np.float32(n)
    x = bits.view(np.float32) * nf - nf
    return np.minimum(x.astype(np.int64), n - 1)


@njit(cache=True)
def sample_lanes(anchors, state, table, table_mask, n, out, max_tries):
    """Fill ``out`` with verified non-edge partners of ``anchors``.

    ``state`` (uint64 holding 32-bit words) is advanced in place, all lanes
    every round. Lanes with a negative anchor are idle and get partner -1.
    Returns the total number of draws made by active lanes, or -1 if some
    lane is still unresolved after ``max_tries`` rounds.
    """
    lanes = anchors.shape[0]
    active = np.ones(lanes, dtype=np.bool_)
    for l in range(lanes):
        if anchors[l] < 0:
            active[l] = False
            out[l] = -1
    draws = 0
    for _ in range(max_tries):
        for l in range(lanes):
            state[l] = lcg_next(state[l])
            if active[l]:
                out[l] = uniform_index_jit(state[l], n)
                draws += 1
        pending = False
        for l in range(lanes):
            if active[l]:
                a = anchors[l]
                g = out[l]
                if g != a and table[hash_pair_jit(a, g, n, table_mask)] == 0:
                    active[l] = False
                else:
                    pending = True
        if not pending:
            return draws
    return -1


def sample_non_edges(anchor_lanes, rng: LaneRng, hashset: EdgeHashSet, n: int) -> np.ndarray:
    """Draw one verified non-edge partner per lane; advances ``rng`` in place."""
    anchors = np.ascontiguousarray(anchor_lanes, dtype=np.int64)
    if anchors.shape != rng.state.shape:
        raise ValueError("need exactly one anchor per lane")
    state = rng.state.astype(np.uint64)
    out = np.empty_like(anchors)
    draws = sample_lanes(anchors, state, hashset.table, hashset.s - 1, n, out, MAX_TRIES)
    rng.state[:] = state.astype(np.uint32)
    if draws < 0:
        raise SamplingError(f"no non-edge partner found within {MAX_TRIES} draws; graph is (nearly) complete")
    return out
