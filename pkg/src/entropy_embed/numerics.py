"""Sigmoid edge model, description lengths and their derivatives.

Notation used throughout: for a pair at distance ``delta`` the signed
argument is ``v = sign * (delta - mu) / (sqrt(2) * sigma)`` with ``sign = +1``
for edges and ``-1`` for non-edges, so that both cases share one form::

    P(observed entry) = erfc(v) / 2
    dl                = -log2(erfc(v) / 2)
    r(v)              = exp(-v**2) / erfc(v)

and the local quadratic surrogate ``w * (delta - d)**2`` that agrees with
``dl`` in its first and second distance derivatives is::

    w     = r * (r - sqrt(pi) * v) / (pi * ln2 * sigma**2)
    d     = delta - sign * r / (sqrt(2*pi) * ln2 * w * sigma)

Probabilities are floored at ``P_FLOOR``; past the floor ``dl`` is constant,
so the surrogate there is flat (``w = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.optimize import brentq
from scipy.special import erfc, erfcx

from .piecewise import default_approximant, eval_piecewise

MU = 1.5
SIGMA_MIN = 1e-3
SIGMA_MAX = 16.0
P_FLOOR = 1e-12

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)
LN2 = math.log(2.0)

# erfc(V_FLOOR) / 2 == P_FLOOR: beyond this argument the probability is floored
V_FLOOR = brentq(lambda v: 0.5 * math.erfc(v) - P_FLOOR, 0.0, 10.0, xtol=1e-15)


@dataclass(frozen=True)
class SigmoidParams:
    sigma: float = 1.0
    mu: float = MU

    def __post_init__(self):
        if not SIGMA_MIN <= self.sigma <= SIGMA_MAX:
            raise ValueError(f"sigma={self.sigma} outside [{SIGMA_MIN}, {SIGMA_MAX}]")


class Parabola(NamedTuple):
    d_target: float
    w: float


def _signed_arg(delta, p: SigmoidParams, is_edge):
    sign = np.where(is_edge, 1.0, -1.0)
    return sign * (np.asarray(delta, dtype=np.float64) - p.mu) / (SQRT2 * p.sigma)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def sigmoid(delta, p: SigmoidParams, is_edge=True):
    """Modelled probability of the observed entry: s+ for edges, s- for non-edges."""
    return _scalar(0.5 * erfc(_signed_arg(delta, p, is_edge)))


def description_length(delta, p: SigmoidParams, is_edge=True):
    prob = 0.5 * erfc(_signed_arg(delta, p, is_edge))
    return _scalar(-np.log2(np.maximum(prob, P_FLOOR)))


def dl_sigma_derivative(delta, p: SigmoidParams, is_edge=True):
    """Closed-form d(dl)/d(sigma)."""
    v = _signed_arg(delta, p, is_edge)
    with np.errstate(over="ignore", invalid="ignore"):
        grad = -2.0 / (SQRT_PI * LN2) * v / (erfcx(v) * p.sigma)
    return _scalar(np.where(v >= V_FLOOR, 0.0, grad))


def parabola_params(delta: float, p: SigmoidParams, is_edge: bool = True, fast: bool = False) -> Parabola:
    approx = default_approximant("erfc_ratio")
    w, d = parabola_core(
        float(delta), p.mu, p.sigma, 1.0 if is_edge else -1.0, fast, approx.knots, approx.coeffs, approx.lo, approx.hi
    )
    return Parabola(d, w)


@njit(cache=True)
def erfc_ratio_exact(v):
    return math.exp(-v * v) / math.erfc(v)


@njit(cache=True)
def parabola_core(delta, mu, sigma, sign, fast, knots, coeffs, lo, hi):
    """Return ``(w, d)`` of the derivative-matching surrogate; ``w`` is clamped at 0."""
    v = sign * (delta - mu) / (SQRT2 * sigma)
    if v >= V_FLOOR:
        return 0.0, delta
    if fast:
        r = eval_piecewise(v, knots, coeffs, False, lo, hi)
    else:
        r = erfc_ratio_exact(v)
    w = r * (r - SQRT_PI * v) / (math.pi * LN2 * sigma * sigma)
    if not w > 0.0:
        return 0.0, delta
    d = delta - sign * r / (SQRT_2PI * LN2 * w * sigma)
    return w, d


def dl_delta_derivatives(delta, p: SigmoidParams, is_edge=True):
    """First and second distance-derivatives of dl (exact math, unfloored)."""
    v = _signed_arg(delta, p, is_edge)
    sign = np.where(is_edge, 1.0, -1.0)
    r = 1.0 / erfcx(v)
    first = sign * 2.0 * r / (SQRT_2PI * LN2 * p.sigma)
    second = 2.0 * r * (r - SQRT_PI * v) / (math.pi * LN2 * p.sigma**2)
    return _scalar(first), _scalar(second)
