"""Weighted supremum norms used by the linear theory on exterior regions.

For a decay exponent beta and interior exponent sigma in (0, 2), centred at
xi:

    |phi|_*  = sup_{|x-xi| <= 1} |phi|  +  sup_{|x-xi| >= 1} |x-xi|^beta |phi|
    |h|_**   = sup_{|x-xi| <= 1} |x-xi|^sigma |h|
             + sup_{|x-xi| >= 1} |x-xi|^{2+beta} |h|

All suprema are discrete approximations over a declared log-spaced radial
sampling grid in t = |x - xi|, with one round of tenfold local refinement
around the maximiser (sup norms are otherwise grid biased).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .profiles import Dimension

__all__ = [
    "WeightedNormParams",
    "beta_range",
    "norm_star",
    "norm_starstar",
    "grid_norm_star",
    "grid_norm_starstar",
]


def beta_range(dim: Dimension) -> tuple[float, float]:
    """Admissible open interval (0, upper) for the decay exponent beta."""
    n = dim.n
    if n == 3:
        return (0.0, 0.5)
    if n <= 9:
        return (0.0, 1.0)
    mu0_minus = 0.5 * ((n - 2) - math.sqrt((n - 2) * (n - 10)))
    return (0.0, min(mu0_minus, 1.0))


@dataclass(frozen=True)
class WeightedNormParams:
    """Exponents (beta, sigma) and centre (xi, Z) for the norm calculus."""

    beta: float
    sigma: float = 1.8
    xi: tuple[float, ...] = (0.0, 0.0, 0.0)
    Z: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.sigma < 2.0:
            raise ValueError("sigma must lie in (0, 2)")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if np.linalg.norm(self.xi) > self.Z:
            raise ValueError("|xi| must not exceed Z")

    @classmethod
    def defaults_for(cls, dim: Dimension, sigma: float = 1.8) -> "WeightedNormParams":
        """Mid-range beta for the dimension; sigma near the top of (0, 2)."""
        lo, hi = beta_range(dim)
        params = cls(beta=0.5 * (lo + hi), sigma=sigma)
        params.validate_for(dim)
        return params

    def validate_for(self, dim: Dimension):
        lo, hi = beta_range(dim)
        if not lo < self.beta < hi:
            raise ValueError(
                f"beta={self.beta} outside admissible range ({lo}, {hi}) for N={dim.n}")


def _refined_sup(f, t, vals, rounds: int = 1, factor: int = 10):
    """Discrete sup of vals = f(t) with local refinement near the maximiser."""
    best = float(np.max(vals))
    for _ in range(rounds):
        i = int(np.argmax(vals))
        lo = t[max(i - 1, 0)]
        hi = t[min(i + 1, len(t) - 1)]
        t = np.geomspace(max(lo, 1e-300), hi, 2 * factor + 1)
        vals = f(t)
        best = max(best, float(np.max(vals)))
    return best


def _default_tgrid(t_min=1e-4, t_max=1e4, num=4001):
    return np.geomspace(t_min, t_max, num)


def norm_star(phi, params: WeightedNormParams, tgrid=None) -> float:
    """|phi|_* for a callable of the radial distance t = |x - xi|."""
    t = _default_tgrid() if tgrid is None else np.asarray(tgrid, dtype=float)
    inner_t = t[t <= 1.0]
    outer_t = t[t >= 1.0]
    inner = _refined_sup(lambda tt: np.abs(phi(tt)), inner_t,
                         np.abs(phi(inner_t))) if len(inner_t) else 0.0
    outer = _refined_sup(lambda tt: tt ** params.beta * np.abs(phi(tt)),
                         outer_t, outer_t ** params.beta * np.abs(phi(outer_t))) \
        if len(outer_t) else 0.0
    return inner + outer


def norm_starstar(h, params: WeightedNormParams, tgrid=None) -> float:
    """|h|_** for a callable of the radial distance t = |x - xi|."""
    t = _default_tgrid() if tgrid is None else np.asarray(tgrid, dtype=float)
    inner_t = t[t <= 1.0]
    outer_t = t[t >= 1.0]
    inner = _refined_sup(lambda tt: tt ** params.sigma * np.abs(h(tt)), inner_t,
                         inner_t ** params.sigma * np.abs(h(inner_t))) \
        if len(inner_t) else 0.0
    outer = _refined_sup(lambda tt: tt ** (2.0 + params.beta) * np.abs(h(tt)),
                         outer_t,
                         outer_t ** (2.0 + params.beta) * np.abs(h(outer_t))) \
        if len(outer_t) else 0.0
    value = inner + outer
    if not np.isfinite(value):
        raise ValueError("norm is not finite on the sampling grid")
    return value


def grid_norm_star(t, vals, beta: float) -> float:
    """|.|_* of tabulated values (no refinement; used on solver grids)."""
    t = np.asarray(t, dtype=float)
    vals = np.abs(np.asarray(vals, dtype=float))
    inner = vals[t <= 1.0].max() if (t <= 1.0).any() else 0.0
    outer = (t ** beta * vals)[t >= 1.0].max() if (t >= 1.0).any() else 0.0
    return float(inner + outer)


def grid_norm_starstar(t, vals, beta: float, sigma: float) -> float:
    t = np.asarray(t, dtype=float)
    vals = np.abs(np.asarray(vals, dtype=float))
    inner = (t ** sigma * vals)[t <= 1.0].max() if (t <= 1.0).any() else 0.0
    outer = (t ** (2.0 + beta) * vals)[t >= 1.0].max() if (t >= 1.0).any() else 0.0
    return float(inner + outer)
