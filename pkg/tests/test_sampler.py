from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropy_embed.errors import CapabilityError, SamplingError
from entropy_embed.graph import Graph, are_edges_exact, build_edge_hash
from entropy_embed.sampler import (
    LaneRng,
    lane_uniform_index,
    lane_uniform_indices,
    lcg_step,
    sample_lanes,
    sample_non_edges,
    uniform_index_jit,
)

from conftest import random_graph


def scalar_lcg(state, steps):
    for _ in range(steps):
        state = (1103515245 * state + 1) % 2**32
    return state


@pytest.mark.parametrize("start, expected", [(1, 1103515246), (0, 1)])
def test_lcg_single_step(start, expected):
    assert lcg_step(LaneRng(np.array([start], dtype=np.uint32))).state[0] == expected


def test_lcg_lanes_follow_scalar_recurrence():
    rng = LaneRng.from_seed(9, lanes=16)
    start = rng.state.astype(np.int64).tolist()
    for _ in range(3):
        rng = lcg_step(rng)
    assert rng.state.tolist() == [scalar_lcg(s, 3) for s in start]


def test_lcg_step_is_pure():
    rng = LaneRng(np.array([5, 6], dtype=np.uint32))
    lcg_step(rng)
    assert rng.state.tolist() == [5, 6]


@pytest.mark.parametrize("lanes", [1, 16, 64])
def test_lane_seeds_distinct_and_deterministic(lanes):
    a = LaneRng.from_seed(123, lanes)
    b = LaneRng.from_seed(123, lanes)
    assert a.lanes == lanes
    assert np.array_equal(a.state, b.state)
    assert len(set(a.state.tolist())) == lanes
    assert not np.array_equal(LaneRng.from_seed(124, lanes).state, a.state)


def test_index_examples():
    assert lane_uniform_index(0, 1000) == 0
    assert lane_uniform_index(0xFFFFFF80, 7) == lane_uniform_index(0x7FFF80, 7)
    # f = 2 - 2^-23 -> f*1000 - 1000 = 999.99988 -> 999
    assert lane_uniform_index(0x7FFFFF, 1000) == 999


def _float32_oracle(word, n):
    f = np.float32(1.0 + (word & 0x7FFFFF) / 2**23)
    return min(int(np.float32(np.float32(f * np.float32(n)) - np.float32(n))), n - 1)


@given(st.integers(0, 2**32 - 1), st.integers(1, 2**23))
def test_index_matches_float32_oracle(word, n):
    idx = lane_uniform_index(word, n)
    assert 0 <= idx < n
    assert idx == _float32_oracle(word, n)
    assert idx == uniform_index_jit(np.uint64(word), n)
    assert idx == lane_uniform_indices(np.array([word]), n)[0]


def test_index_large_n():
    n = 2**23 + 3
    assert lane_uniform_index(2**32 - 1, n) == (2**32 - 1) % n
    with pytest.raises(CapabilityError):
        lane_uniform_index(5, n, strict=True)
    with pytest.raises(ValueError):
        lane_uniform_index(5, 0)


def test_sample_single_legal_partner():
    g = Graph(3, np.array([0]), np.array([1]))
    hs = build_edge_hash(g)
    rng = LaneRng.from_seed(0, 16)
    for _ in range(20):
        out = sample_non_edges(np.zeros(16, dtype=np.int64), rng, hs, 3)
        assert out.tolist() == [2] * 16


def test_sample_advances_rng_in_place():
    g = random_graph(100, 50, 0)
    hs = build_edge_hash(g)
    rng = LaneRng.from_seed(0, 16)
    before = rng.state.copy()
    sample_non_edges(np.arange(16), rng, hs, g.n)
    assert not np.array_equal(before, rng.state)


def test_sparse_graph_needs_about_one_draw():
    g = Graph(1000, np.array([0]), np.array([1]))
    hs = build_edge_hash(g)
    state = LaneRng.from_seed(1, 16).state.astype(np.uint64)
    out = np.empty(16, dtype=np.int64)
    anchors = np.random.default_rng(0).integers(0, 1000, 16)
    draws = 0
    calls = 100_000 // 16
    for _ in range(calls):
        draws += sample_lanes(anchors, state, hs.table, hs.s - 1, 1000, out, 10_000)
    assert draws / (16 * calls) < 1.01


def test_samples_are_true_non_edges():
    g = random_graph(300, 3000, 2)
    hs = build_edge_hash(g)
    rng = LaneRng.from_seed(5, 16)
    anchors_all, partners_all = [], []
    for k in range(500):
        anchors = np.random.default_rng(k).integers(0, g.n, 16)
        partners = sample_non_edges(anchors, rng, hs, g.n)
        anchors_all.append(anchors)
        partners_all.append(partners)
    a = np.concatenate(anchors_all)
    p = np.concatenate(partners_all)
    assert np.all(a != p)
    assert not are_edges_exact(g, a, p).any()


def test_frozen_lanes_never_change():
    # lane 0's anchor has one legal partner; lane 1's has many. Once a lane
    # resolves it must keep its value even while the other keeps retrying.
    g = Graph(4, np.array([0, 0]), np.array([1, 2]))
    hs = build_edge_hash(g)
    state = np.array([7, 8], dtype=np.uint64)
    out = np.full(2, -5, dtype=np.int64)
    assert sample_lanes(np.array([0, 3]), state, hs.table, hs.s - 1, 4, out, 100) > 0
    assert out[0] == 3 and out[1] in (0, 1, 2)


def test_idle_lanes():
    g = Graph(3, np.array([0, 0]), np.array([1, 2]))
    hs = build_edge_hash(g)
    state = np.array([1, 2], dtype=np.uint64)
    out = np.zeros(2, dtype=np.int64)
    assert sample_lanes(np.array([-1, 1]), state, hs.table, hs.s - 1, 3, out, 100) > 0
    assert out.tolist() == [-1, 2]


def test_complete_graph_raises():
    k = 6
    e = np.array([(a, b) for a in range(k) for b in range(a + 1, k)])
    g = Graph(k, e[:, 0], e[:, 1])
    hs = build_edge_hash(g)
    with pytest.raises(SamplingError):
        sample_non_edges(np.zeros(16, dtype=np.int64), LaneRng.from_seed(0, 16), hs, k)


def test_lane_count_must_match():
    g = random_graph(20, 10, 3)
    with pytest.raises(ValueError):
        sample_non_edges(np.arange(3), LaneRng.from_seed(0, 16), build_edge_hash(g), g.n)
