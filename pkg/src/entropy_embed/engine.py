"""Weighted-majorization rounds over edges and sampled non-edges.

A round reads the previous coordinates only. Edges are split into one
contiguous block per worker (block sizes are multiples of the lane width);
each worker walks its block ``lanes`` edges at a time. For every edge
(i, j) it adds the edge's majorization terms, draws a non-edge partner g of
i and h of j, and adds those terms too. Lane ``l`` of worker ``w`` only
ever writes replica ``(w, l)`` of the numerator/denominator bank, so no two
lanes can collide; replicas are summed once the pass is over.

Partner draws for edge ``e`` in round ``r`` come from LCG streams keyed by
``(seed, r, e, side)``, so the samples do not depend on how edges are
spread over workers and lanes.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigurationError, DivergenceError, SamplingError
from .graph import EdgeHashSet, Graph, basic_entropy, build_edge_hash, random_relabel
from .numerics import MU, Parabola, SigmoidParams, parabola_core
from .piecewise import default_approximant
from .sampler import MAX_TRIES, sample_lanes, seed_key, stream_seed
from .slope import DEFAULT_BINS, Histogram, objective, sigma_search

log = logging.getLogger(__name__)

SAMPLES_PER_EDGE = 2


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass
class IterationConfig:
    max_iters: int = 100
    lanes: int = 16
    workers: int = field(default_factory=default_workers)
    tol: float = 1e-4
    window: int = 5
    samples_per_edge: int = SAMPLES_PER_EDGE
    relabel_period: int = 0
    exact_math: bool = False
    hash_bits: int | None = None
    bins: int = DEFAULT_BINS
    delta_max: float = 8 * MU

    def __post_init__(self):
        if self.lanes < 1 or self.workers < 1 or self.max_iters < 1:
            raise ConfigurationError("lanes, workers and max_iters must all be >= 1")
        if self.samples_per_edge != SAMPLES_PER_EDGE:
            raise ConfigurationError("exactly two non-edge samples are drawn per edge")
        if self.relabel_period < 0 or self.window < 1:
            raise ConfigurationError("relabel_period must be >= 0 and window >= 1")


def init_embedding(n: int, d: int, seed: int) -> np.ndarray:
    if n < 1 or d < 1:
        raise ConfigurationError("n and d must be >= 1")
    return np.random.default_rng(seed).random((n, d))


def pair_contribution(xi, xj, parab: Parabola):
    """Numerator/denominator increments of one pair for both endpoints."""
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    w = parab.w
    dist = float(np.linalg.norm(xi - xj))
    s = max(parab.d_target, 0.0) / dist if dist != 0.0 else 0.0
    return w * (xj + s * (xi - xj)), w, w * (xi + s * (xj - xi)), w


class AccumulatorBank:
    """Per-(worker, lane) numerator and denominator replicas."""

    def __init__(self, workers: int, lanes: int, n: int, d: int):
        self.y = np.zeros((workers, lanes, n, d))
        self.z = np.zeros((workers, lanes, n))

    @property
    def shape(self):
        return self.y.shape

    def reduce(self):
        """Sum all replicas into ``(y, z)`` and zero them for the next round."""
        t, L, n, d = self.y.shape
        y = np.empty((n, d))
        z = np.empty(n)
        _reduce(self.y, self.z, y, z)
        return y, z


def reduce(bank: AccumulatorBank):
    return bank.reduce()


@njit(parallel=True, cache=True)
def _reduce(ybank, zbank, y, z):
    t, L, n, d = ybank.shape
    for i in prange(n):
        for k in range(d):
            y[i, k] = 0.0
        z[i] = 0.0
        for w in range(t):
            for l in range(L):
                for k in range(d):
                    y[i, k] += ybank[w, l, i, k]
                    ybank[w, l, i, k] = 0.0
                z[i] += zbank[w, l, i]
                zbank[w, l, i] = 0.0


def partition_edges(m: int, workers: int, lanes: int) -> np.ndarray:
    """Block boundaries: whole lane-chunks spread evenly, the ragged tail to the last worker."""
    chunks, rest = divmod(m, lanes)
    base, extra = divmod(chunks, workers)
    sizes = np.array([(base + (w < extra)) * lanes for w in range(workers)], dtype=np.int64)
    sizes[-1] += rest
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


@njit(cache=True, inline="always")
def _add_pair(coords, i, j, sign, mu, sigma, fast, knots, coeffs, lo, hi, yrep, zrep, hist, delta_max):
    d = coords.shape[1]
    dist2 = 0.0
    for k in range(d):
        diff = coords[i, k] - coords[j, k]
        dist2 += diff * diff
    delta = math.sqrt(dist2)
    bins = hist.shape[0]
    b = int(delta / delta_max * bins)
    if b >= bins:
        b = bins - 1
    hist[b] += 1
    w, target = parabola_core(delta, mu, sigma, sign, fast, knots, coeffs, lo, hi)
    if w <= 0.0:
        return
    # a negative target is infeasible; the parabola's best feasible distance is 0
    s = max(target, 0.0) / delta if delta > 0.0 else 0.0
    for k in range(d):
        xi = coords[i, k]
        xj = coords[j, k]
        yrep[i, k] += w * (xj + s * (xi - xj))
        yrep[j, k] += w * (xi + s * (xj - xi))
    zrep[i] += w
    zrep[j] += w


@njit(parallel=True, cache=True)
def _accumulate(
    src, dst, coords, bounds, lanes, mu, sigma, fast, knots, coeffs, lo, hi,
    key, round_idx, table, table_mask, with_nonedges, replay, samples, saturated,
    ybank, zbank, ehist, nehist, delta_max, status,
):
    n = coords.shape[0]
    workers = bounds.shape[0] - 1
    for w in prange(workers):
        anchors = np.empty(lanes, dtype=np.int64)
        state = np.empty(lanes, dtype=np.uint64)
        partners = np.empty(lanes, dtype=np.int64)
        start = bounds[w]
        end = bounds[w + 1]
        for b in range(start, end, lanes):
            if status[w] != 0:
                break
            cnt = min(lanes, end - b)
            for l in range(cnt):
                _add_pair(coords, src[b + l], dst[b + l], 1.0, mu, sigma, fast, knots, coeffs, lo, hi,
                          ybank[w, l], zbank[w, l], ehist[w], delta_max)
            if not with_nonedges:
                continue
            for side in range(2):
                for l in range(cnt):
                    a = src[b + l] if side == 0 else dst[b + l]
                    # a vertex adjacent to all others has no non-edge partner
                    anchors[l] = -1 if saturated[a] else a
                if replay:
                    for l in range(cnt):
                        partners[l] = samples[side, b + l]
                else:
                    for l in range(cnt):
                        state[l] = stream_seed(key, round_idx, b + l, side)
                    if sample_lanes(anchors[:cnt], state[:cnt], table, table_mask, n, partners[:cnt], MAX_TRIES) < 0:
                        status[w] = 1
                        break
                    for l in range(cnt):
                        samples[side, b + l] = partners[l]
                for l in range(cnt):
                    if anchors[l] < 0 or partners[l] < 0:
                        continue
                    _add_pair(coords, anchors[l], partners[l], -1.0, mu, sigma, fast, knots, coeffs, lo, hi,
                              ybank[w, l], zbank[w, l], nehist[w], delta_max)


class Accumulation(NamedTuple):
    histogram: Histogram
    samples: np.ndarray  # (2, m) partners of src (row 0) and dst (row 1); -1 if none


def accumulate(
    g: Graph,
    coords: np.ndarray,
    params: SigmoidParams,
    cfg: IterationConfig,
    hashset: EdgeHashSet,
    bank: AccumulatorBank,
    seed: int = 0,
    round_idx: int = 0,
    samples: np.ndarray | None = None,
) -> Accumulation:
    """Run the accumulation pass of one round into ``bank``.

    Pass ``samples`` (as returned by an earlier call) to replay a fixed set
    of non-edge partners instead of drawing them.
    """
    workers, lanes = bank.y.shape[:2]
    if coords.shape != (g.n, bank.y.shape[3]) or bank.y.shape[2] != g.n:
        raise ConfigurationError("embedding, bank and graph sizes disagree")
    with_nonedges = g.num_pairs > g.m
    replay = samples is not None
    if replay:
        samples = np.ascontiguousarray(samples, dtype=np.int64)
        if samples.shape != (2, g.m):
            raise ConfigurationError("replayed samples must have shape (2, m)")
    else:
        samples = np.full((2, g.m), -1, dtype=np.int64)
    approx = default_approximant("erfc_ratio")
    ehist = np.zeros((workers, cfg.bins), dtype=np.int64)
    nehist = np.zeros((workers, cfg.bins), dtype=np.int64)
    status = np.zeros(workers, dtype=np.int64)
    _accumulate(
        g.src, g.dst, np.ascontiguousarray(coords, dtype=np.float64), partition_edges(g.m, workers, lanes), lanes,
        params.mu, params.sigma, not cfg.exact_math, approx.knots, approx.coeffs, approx.lo, approx.hi,
        np.uint64(seed_key(seed)), round_idx, hashset.table, hashset.s - 1, with_nonedges, replay, samples,
        g.degrees() == g.n - 1,
        bank.y, bank.z, ehist, nehist, cfg.delta_max, status,
    )
    if status.any():
        raise SamplingError(f"no non-edge partner found within {MAX_TRIES} draws; graph is (nearly) complete")
    hist = Histogram(cfg.bins, cfg.delta_max, float(g.num_pairs - g.m), ehist.sum(axis=0), nehist.sum(axis=0))
    return Accumulation(hist, samples)


def run_iteration(
    g: Graph,
    coords: np.ndarray,
    params: SigmoidParams,
    cfg: IterationConfig,
    hashset: EdgeHashSet,
    bank: AccumulatorBank,
    seed: int = 0,
    round_idx: int = 0,
    samples: np.ndarray | None = None,
) -> tuple[np.ndarray, Histogram]:
    acc = accumulate(g, coords, params, cfg, hashset, bank, seed, round_idx, samples)
    y, z = bank.reduce()
    new = coords.copy()
    touched = z > 0.0
    new[touched] = y[touched] / z[touched, None]
    if not np.all(np.isfinite(new)):
        raise DivergenceError(round_idx)
    return new, acc.histogram


@dataclass
class EmbedResult:
    embedding: np.ndarray  # rows in the input graph's vertex order
    pe_trace: list[float]
    sigma_trace: list[float]
    converged: bool
    iterations: int
    histogram: Histogram | None = None


def _has_converged(trace: list[float], window: int, tol: float, baseline: float = np.inf) -> bool:
    """True when the last ``window`` rounds failed to beat the earlier best by ``tol`` (relative).

    Rounds before the estimate first drops below ``baseline`` (the cost of
    coding the adjacency without any geometry) do not count: the layout
    has not started to carry information yet and the trace is flat there.
    """
    below = [k for k, v in enumerate(trace) if v < baseline]
    if not below:
        return False
    trace = trace[below[0]:]
    if len(trace) <= window:
        return False
    before = min(trace[:-window])
    recent = min(trace[-window:])
    return before <= 0.0 or (before - recent) < tol * before


def embed(g: Graph, d: int, cfg: IterationConfig | None = None, seed: int = 0) -> EmbedResult:
    """Embed ``g`` into ``d`` dimensions.

    The graph is randomly relabeled (seeded) before optimisation; the
    returned coordinates are mapped back to ``g``'s vertex order.
    ``pe_trace[k]`` is the sampled predictive entropy (bits per pair) of
    the coordinates entering round ``k``, at that round's fitted slope.
    """
    cfg = cfg or IterationConfig()
    start = init_embedding(g.n, d, seed)
    if g.n < 2 or g.m == 0:
        warnings.warn("graph has fewer than two vertices or no edges; returning the initial embedding", stacklevel=2)
        return EmbedResult(start, [], [], True, 0)

    numba.set_num_threads(max(1, min(cfg.workers, numba.config.NUMBA_NUM_THREADS)))
    work, perm = random_relabel(g, seed)
    hashset = build_edge_hash(work, cfg.hash_bits)
    coords = np.empty_like(start)
    coords[perm.forward] = start
    bank = AccumulatorBank(cfg.workers, cfg.lanes, g.n, d)

    sigma = 1.0
    pe_trace: list[float] = []
    sigma_trace: list[float] = []
    converged = False
    hist = None
    best = (np.inf, coords.copy(), perm)
    baseline = basic_entropy(g)
    it = 0
    for it in range(cfg.max_iters):
        if cfg.relabel_period and it and it % cfg.relabel_period == 0:
            work, step = random_relabel(work, seed + it)
            coords[step.forward] = coords.copy()
            perm = perm.then(step)
            hashset = build_edge_hash(work, cfg.hash_bits)
        previous = coords
        coords, hist = run_iteration(work, coords, SigmoidParams(sigma), cfg, hashset, bank, seed, it)
        sigma = sigma_search(hist).sigma
        pe_trace.append(objective(hist, sigma) / g.num_pairs)
        sigma_trace.append(sigma)
        log.debug("round %d: pe=%.5f sigma=%.4f", it, pe_trace[-1], sigma)
        # the estimate scores the coordinates that entered this round
        if pe_trace[-1] < best[0]:
            best = (pe_trace[-1], previous, perm)
        if _has_converged(pe_trace, cfg.window, cfg.tol, baseline):
            converged = True
            break
    _, coords, perm = best
    return EmbedResult(coords[perm.forward], pe_trace, sigma_trace, converged, it + 1, hist)
