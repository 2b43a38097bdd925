"""Distance histograms and bisection search for the sigmoid slope."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .numerics import MU, SIGMA_MAX, SIGMA_MIN, SigmoidParams, description_length, dl_sigma_derivative

DEFAULT_BINS = 512
SIGMA_TOL = 1e-4


@dataclass(eq=False)
class Histogram:
    """Edge and sampled non-edge distance tallies over ``[0, delta_max]``.

    ``nonedge_total`` is the number of non-edge pairs in the graph (N - m);
    each sampled non-edge stands for ``nonedge_weight`` of them.
    """

    bins: int = DEFAULT_BINS
    delta_max: float = 8 * MU
    nonedge_total: float = 1.0
    edge_counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    nonedge_counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.edge_counts is None:
            self.edge_counts = np.zeros(self.bins, dtype=np.int64)
        if self.nonedge_counts is None:
            self.nonedge_counts = np.zeros(self.bins, dtype=np.int64)

    @property
    def nonedge_weight(self) -> float:
        samples = int(self.nonedge_counts.sum())
        return self.nonedge_total / samples if samples else 1.0

    @property
    def midpoints(self) -> np.ndarray:
        width = self.delta_max / self.bins
        return (np.arange(self.bins) + 0.5) * width

    def bin_of(self, delta: float) -> int:
        return min(int(delta / self.delta_max * self.bins), self.bins - 1)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_mid", "edge_count", "nonedge_count"])
            for mid, e, ne in zip(self.midpoints, self.edge_counts, self.nonedge_counts):
                writer.writerow([f"{mid:.6g}", int(e), int(ne)])


def record(h: Histogram, delta: float, is_edge: bool) -> None:
    if delta < 0:
        raise ValueError("distance must be non-negative")
    counts = h.edge_counts if is_edge else h.nonedge_counts
    counts[h.bin_of(delta)] += 1


def merge(h1: Histogram, h2: Histogram) -> Histogram:
    if (h1.bins, h1.delta_max) != (h2.bins, h2.delta_max):
        raise ConfigurationError("cannot merge histograms with different binning")
    if h1.nonedge_total != h2.nonedge_total:
        raise ConfigurationError("cannot merge histograms of different graphs")
    return Histogram(
        h1.bins,
        h1.delta_max,
        h1.nonedge_total,
        h1.edge_counts + h2.edge_counts,
        h1.nonedge_counts + h2.nonedge_counts,
    )


def objective(h: Histogram, sigma: float, mu: float = MU) -> float:
    """Estimated total description length F(sigma) of all vertex pairs, in bits."""
    p = SigmoidParams(sigma, mu)
    mids = h.midpoints
    return float(
        h.edge_counts @ description_length(mids, p, True)
        + h.nonedge_weight * (h.nonedge_counts @ description_length(mids, p, False))
    )


def objective_slope(h: Histogram, sigma: float, mu: float = MU) -> float:
    p = SigmoidParams(sigma, mu)
    mids = h.midpoints
    return float(
        h.edge_counts @ dl_sigma_derivative(mids, p, True)
        + h.nonedge_weight * (h.nonedge_counts @ dl_sigma_derivative(mids, p, False))
    )


class SigmaFit(NamedTuple):
    sigma: float
    steps: int
    bracketed: bool


def sigma_search(
    h: Histogram, mu: float = MU, lo: float = SIGMA_MIN, hi: float = SIGMA_MAX, tol: float = SIGMA_TOL, scan: int = 33
) -> SigmaFit:
    """Minimise F over ``[lo, hi]``.

    F is flat near ``lo`` once every pair sits on a plateau or the
    probability floor, so a coarse log-spaced scan first picks the best
    basin; bisection on the analytic F' then runs inside the scan cell
    around it. Without a sign change there the best scan point wins.
    """
    if h.edge_counts.sum() + h.nonedge_counts.sum() == 0:
        raise ConfigurationError("cannot fit sigma to an empty histogram")
    grid = np.geomspace(lo, hi, scan)
    values = np.array([objective(h, s, mu) for s in grid])
    k = int(np.argmin(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, scan - 1)]
    if not (objective_slope(h, a, mu) < 0.0 < objective_slope(h, b, mu)):
        return SigmaFit(float(grid[k]), 0, False)
    steps = 0
    while b - a > tol:
        mid = 0.5 * (a + b)
        if objective_slope(h, mid, mu) < 0.0:
            a = mid
        else:
            b = mid
        steps += 1
    sigma = float(0.5 * (a + b))
    if objective(h, sigma, mu) > values[k]:
        return SigmaFit(float(grid[k]), steps, True)
    return SigmaFit(sigma, steps, True)


def optimize_sigma(h: Histogram, mu: float = MU) -> float:
    return sigma_search(h, mu).sigma
