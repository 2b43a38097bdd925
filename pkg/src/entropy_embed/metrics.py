"""Predictive entropy of an embedding, SSQ against ground truth, separation stats."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import pdist
from scipy.stats import mannwhitneyu

from .errors import ConfigurationError
from .graph import Graph, are_edges_exact, basic_entropy
from .numerics import SIGMA_MAX, SIGMA_MIN, SigmoidParams, description_length

MAX_EXACT_PAIRS = 10**8
MU_GRID = np.arange(0.5, 3.0 + 1e-9, 0.125)
SIGMA_GRID = np.geomspace(SIGMA_MIN, SIGMA_MAX, 41)


@dataclass(frozen=True)
class PEReport:
    pe: float  # bits per pair
    mu_star: float
    sigma_star: float
    h_basic: float
    compression_ratio: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _total_bits(edge_d, nonedge_d, nonedge_weight, mu, sigma):
    p = SigmoidParams(sigma, mu)
    bits = float(np.sum(description_length(edge_d, p, True)))
    if nonedge_d.size:
        bits += nonedge_weight * float(np.sum(description_length(nonedge_d, p, False)))
    return bits


def _minimise(edge_d, nonedge_d, nonedge_weight):
    """Grid over (mu, sigma), then Nelder-Mead on (mu, log sigma) from the best cell.

    Besides the fixed mu grid, the grid includes quantiles of the observed
    distances so layouts far from unit scale still get a sensible start.
    """
    observed = np.concatenate([edge_d, nonedge_d])
    mus = np.union1d(MU_GRID, np.quantile(observed, np.linspace(0.0, 1.0, 33)))
    best = (np.inf, float(MU_GRID[0]), float(SIGMA_GRID[0]))
    for mu in mus:
        for sigma in SIGMA_GRID:
            bits = _total_bits(edge_d, nonedge_d, nonedge_weight, mu, sigma)
            if bits < best[0]:
                best = (bits, float(mu), float(sigma))

    lo, hi = np.log(SIGMA_MIN), np.log(SIGMA_MAX)

    def f(theta):
        mu, log_sigma = theta
        if mu < 0.0:
            return np.inf
        return _total_bits(edge_d, nonedge_d, nonedge_weight, mu, float(np.exp(np.clip(log_sigma, lo, hi))))

    res = minimize(f, [best[1], np.log(best[2])], method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-9})
    if res.fun < best[0]:
        return float(res.fun), float(res.x[0]), float(np.exp(np.clip(res.x[1], lo, hi)))
    return best


def _report(g: Graph, bits: float, mu: float, sigma: float) -> PEReport:
    pe = bits / g.num_pairs
    h = basic_entropy(g)
    if h == 0.0:
        ratio = 1.0 if pe == 0.0 else float("inf")
    else:
        ratio = pe / h
    return PEReport(pe, mu, sigma, h, ratio)


def _check_rows(g: Graph, emb) -> np.ndarray:
    emb = np.asarray(emb, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] != g.n:
        raise ValueError(f"embedding must have shape ({g.n}, d), got {emb.shape}")
    return emb


def pe_exact(g: Graph, emb) -> PEReport:
    """Predictive entropy over all vertex pairs, minimised over (mu, sigma)."""
    emb = _check_rows(g, emb)
    if g.num_pairs > MAX_EXACT_PAIRS:
        raise ConfigurationError(f"{g.num_pairs} pairs exceed the exact-evaluation limit of {MAX_EXACT_PAIRS}")
    if g.num_pairs == 0:
        return PEReport(0.0, 0.0, 1.0, 0.0, 1.0)
    dist = pdist(emb)
    # condensed index of (i, j), i < j
    i = np.minimum(g.src, g.dst)
    j = np.maximum(g.src, g.dst)
    n = g.n
    idx = n * i - i * (i + 1) // 2 + (j - i - 1)
    is_edge = np.zeros(dist.size, dtype=bool)
    is_edge[idx] = True
    bits, mu, sigma = _minimise(dist[is_edge], dist[~is_edge], 1.0)
    return _report(g, bits, mu, sigma)


def sample_non_edge_pairs(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniformly drawn (i, j) non-edge pairs with i != j, as a (count, 2) array."""
    if g.num_pairs - g.m <= 0 or count <= 0:
        return np.empty((0, 2), dtype=np.int64)
    out = []
    have = 0
    while have < count:
        batch = max(2 * (count - have), 64)
        i = rng.integers(0, g.n, batch)
        j = rng.integers(0, g.n, batch)
        keep = i != j
        i, j = i[keep], j[keep]
        keep = ~are_edges_exact(g, i, j)
        pairs = np.stack([i[keep], j[keep]], axis=1)
        out.append(pairs)
        have += len(pairs)
    return np.concatenate(out)[:count]


def pe_sampled(g: Graph, emb, samples_per_edge: int = 2, seed: int = 0) -> PEReport:
    """Exact edge term plus a reweighted uniform sample of non-edges."""
    if samples_per_edge < 1:
        raise ConfigurationError("samples_per_edge must be >= 1")
    emb = _check_rows(g, emb)
    rng = np.random.default_rng(seed)
    edge_d = np.linalg.norm(emb[g.src] - emb[g.dst], axis=1)
    pairs = sample_non_edge_pairs(g, samples_per_edge * g.m, rng)
    nonedge_d = np.linalg.norm(emb[pairs[:, 0]] - emb[pairs[:, 1]], axis=1)
    weight = (g.num_pairs - g.m) / len(pairs) if len(pairs) else 0.0
    bits, mu, sigma = _minimise(edge_d, nonedge_d, weight)
    return _report(g, bits, mu, sigma)


def ssq_aligned(emb, ground_truth) -> float:
    """Residual after the best similarity transform of ``emb`` onto ``ground_truth``,
    relative to the spread of ``ground_truth`` around its mean."""
    a = np.asarray(emb, dtype=np.float64)
    b = np.asarray(ground_truth, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"embedding shape {a.shape} does not match ground truth {b.shape}")
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    spread = float(np.sum(b * b))
    if spread == 0.0:
        raise ValueError("ground truth points are all identical")
    norm_a = float(np.sum(a * a))
    if norm_a == 0.0:
        return 1.0
    u, s, vt = np.linalg.svd(a.T @ b)
    scale = s.sum() / norm_a
    resid = scale * a @ (u @ vt) - b
    return float(np.sum(resid * resid) / spread)


def _summary(d: np.ndarray) -> dict:
    if d.size == 0:
        return {"count": 0}
    q = np.quantile(d, [0.1, 0.25, 0.5, 0.75, 0.9])
    return {
        "count": int(d.size),
        "mean": float(d.mean()),
        "q10": float(q[0]),
        "q25": float(q[1]),
        "median": float(q[2]),
        "q75": float(q[3]),
        "q90": float(q[4]),
    }


def separation_report(g: Graph, emb, sample_count: int = 10_000, seed: int = 0) -> dict:
    """Edge vs. sampled non-edge distance statistics.

    ``overlap`` is 2*min(A, 1-A) where A is the probability that a random
    non-edge is longer than a random edge (ties count half): 0 for perfect
    separation, 1 for indistinguishable distributions.
    """
    emb = _check_rows(g, emb)
    edge_d = np.linalg.norm(emb[g.src] - emb[g.dst], axis=1)
    pairs = sample_non_edge_pairs(g, sample_count, np.random.default_rng(seed))
    nonedge_d = np.linalg.norm(emb[pairs[:, 0]] - emb[pairs[:, 1]], axis=1)
    overlap = float("nan")
    if edge_d.size and nonedge_d.size:
        u = mannwhitneyu(nonedge_d, edge_d, alternative="two-sided").statistic
        auc = float(u) / (nonedge_d.size * edge_d.size)
        overlap = 2.0 * min(auc, 1.0 - auc)
    return {"edges": _summary(edge_d), "non_edges": _summary(nonedge_d), "overlap": overlap}


def format_table(report: PEReport, separation: dict | None = None, ssq: float | None = None) -> str:
    rows = [
        ("pe (bits/pair)", f"{report.pe:.6f}"),
        ("h_basic (bits/pair)", f"{report.h_basic:.6f}"),
        ("compression ratio", f"{report.compression_ratio:.6f}"),
        ("mu*", f"{report.mu_star:.6g}"),
        ("sigma*", f"{report.sigma_star:.6g}"),
    ]
    if separation is not None:
        for key in ("edges", "non_edges"):
            s = separation[key]
            if s.get("count"):
                rows.append((f"{key} median distance", f"{s['median']:.6g}"))
        rows.append(("distance overlap", f"{separation['overlap']:.4f}"))
    if ssq is not None:
        rows.append(("ssq vs ground truth", f"{ssq:.6f}"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)
