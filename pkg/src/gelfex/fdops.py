"""Finite-difference stencils and smoothed differentiation on uniform grids."""

from __future__ import annotations

import math

import numpy as np

# fourth-order central stencils (divide by h resp. h^2)
D1_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
D2_C4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# fourth-order one-sided first derivative at the first / last node
D1_FWD4 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
D1_BWD4 = -D1_FWD4[::-1]


def savgol_derivative(y: np.ndarray, h: float, deriv: int,
                      half_window: int = 12, degree: int = 6) -> np.ndarray:
    """Least-squares local-polynomial derivative on a uniform grid.

    Fits a polynomial of the given degree over a centred window of
    2*half_window+1 points and evaluates its `deriv`-th derivative at the
    centre.  Returns an array aligned with `y`; entries within half_window
    of either edge are NaN.  Chosen over plain central differences because
    the wide window suppresses quadrature-level noise in tabulated
    solutions without losing high-order accuracy.
    """
    k = np.arange(-half_window, half_window + 1, dtype=float) * h
    X = np.vander(k, degree + 1, increasing=True)
    weights = np.linalg.pinv(X)[deriv] * math.factorial(deriv)
    out = np.full_like(np.asarray(y, dtype=float), np.nan)
    core = np.convolve(y, weights[::-1], mode="valid")
    out[half_window:len(y) - half_window] = core
    return out
