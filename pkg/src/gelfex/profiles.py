"""Radial ground profile of -Delta U = lambda0 e^U and the induced solution family.

The profile U solves the initial value problem

    U'' + (N-1)/r U' + lambda0 e^U = 0,   U(0) = U'(0) = 0,

with lambda0 = 2(N-2), integrated in the logarithmic variable s = log r where
the dynamics are well conditioned. Rescalings U_alpha(r) = U(alpha r) + 2 log
alpha solve the same equation and generate the unit-ball solution family
(lambda_alpha, u_alpha) with lambda_alpha = lambda0 alpha^2 e^{U(alpha)}.

The origin is a regular singular point, so integration starts at r_0 from the
two-term series U = -(lambda0/2N) r^2 + (lambda0^2/(8N(N+2))) r^4 + O(r^6)
whose coefficients are forced by the equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

__all__ = [
    "Dimension",
    "RadialGrid",
    "RadialProfile",
    "BifurcationPoint",
    "solve_profile",
    "scaled_profile",
    "lambda_alpha",
    "u_alpha_ball",
    "bifurcation_diagram",
    "ode_residual",
    "series_coefficients",
]


@dataclass(frozen=True)
class Dimension:
    """Space dimension N >= 3 and the induced coefficient lambda0 = 2(N-2)."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("dimension must be an integer >= 3")
        object.__setattr__(self, "n", int(self.n))

    @property
    def lambda0(self) -> float:
        return 2.0 * (self.n - 2)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive nodes, log-uniform by construction."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 16:
            raise ValueError("grid needs at least 16 nodes")
        if nodes[0] <= 0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be positive and strictly increasing")
        if nodes[0] > 1e-4 or nodes[-1] < 1e3:
            raise ValueError("grid must cover [1e-4, 1e3]")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def log_uniform(cls, r_min: float = 1e-4, r_max: float = 1e3,
                    num: int | None = None, step: float = 0.004) -> "RadialGrid":
        """Log-spaced grid; `num` overrides the target step in s = log r."""
        if num is None:
            num = int(math.ceil((math.log(r_max) - math.log(r_min)) / step)) + 1
        return cls(np.geomspace(r_min, r_max, num))

    @property
    def s(self) -> np.ndarray:
        return np.log(self.nodes)


def series_coefficients(dim: Dimension) -> tuple[float, float]:
    """Taylor coefficients (a, b) of U = a r^2 + b r^4 + O(r^6) at the origin."""
    lam0 = dim.lambda0
    a = -lam0 / (2.0 * dim.n)
    b = lam0 ** 2 / (8.0 * dim.n * (dim.n + 2))
    return a, b


@dataclass(frozen=True)
class RadialProfile:
    """Tabulated U, U' on a log grid with monotone piecewise-cubic evaluation.

    Beyond the last node the profile is continued by the asymptotic form
    U = -2 log r + w_M exp(-kappa (s - s_M)), where w_M is the tail value on
    the grid and kappa the leading decay rate of the tail for this dimension;
    a sharper continuation can be attached from a phase-plane asymptotic fit.
    Below the first node the origin series is used.  Instances are immutable.
    """

    dim: Dimension
    grid: RadialGrid
    U: np.ndarray
    Uprime: np.ndarray
    tol: float
    tail_rate: float
    tail_amplitude: float

    def __post_init__(self):
        for name in ("U", "Uprime"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @cached_property
    def _u_of_s(self):
        # C2 spline: downstream solvers differentiate fields built from the
        # profile twice, and a merely C1 interpolant leaks knot kinks into
        # their residuals; monotonicity is verified on a dense sample in the
        # tests instead of being forced by the interpolant
        return CubicSpline(self.grid.s, self.U)

    @cached_property
    def _v2_of_s(self):
        # v2 = r U'(r), smooth and O(1) in s
        return CubicSpline(self.grid.s, self.grid.nodes * self.Uprime)

    @property
    def r_min(self) -> float:
        return float(self.grid.nodes[0])

    @property
    def r_max(self) -> float:
        return float(self.grid.nodes[-1])

    def u(self, r):
        """U(r), valid for any r > 0 via series / grid / tail continuation."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        lo = r < self.r_min
        hi = r > self.r_max
        mid = ~(lo | hi)
        if lo.any():
            a, b = series_coefficients(self.dim)
            out[lo] = a * r[lo] ** 2 + b * r[lo] ** 4
        if mid.any():
            out[mid] = self._u_of_s(np.log(r[mid]))
        if hi.any():
            s = np.log(r[hi])
            s_m = self.grid.s[-1]
            w = self.tail_amplitude * np.exp(-self.tail_rate * (s - s_m))
            out[hi] = -2.0 * s + w
        return float(out[0]) if scalar else out

    def uprime(self, r):
        """U'(r) with the same continuation conventions as :meth:`u`."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        lo = r < self.r_min
        hi = r > self.r_max
        mid = ~(lo | hi)
        if lo.any():
            a, b = series_coefficients(self.dim)
            out[lo] = 2 * a * r[lo] + 4 * b * r[lo] ** 3
        if mid.any():
            out[mid] = self._v2_of_s(np.log(r[mid])) / r[mid]
        if hi.any():
            s = np.log(r[hi])
            s_m = self.grid.s[-1]
            w = self.tail_amplitude * np.exp(-self.tail_rate * (s - s_m))
            out[hi] = (-2.0 - self.tail_rate * w) / r[hi]
        return float(out[0]) if scalar else out

    def exp_u(self, r):
        return np.exp(self.u(r))

    def u_scaled(self, alpha: float, r):
        """U_alpha(r) = U(alpha r) + 2 log alpha."""
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return self.u(np.asarray(r, dtype=float) * alpha) + 2.0 * math.log(alpha)

    def uprime_scaled(self, alpha: float, r):
        """d/dr U_alpha(r) = alpha U'(alpha r)."""
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return alpha * self.uprime(np.asarray(r, dtype=float) * alpha)

    def exp_u_scaled(self, alpha: float, r):
        return np.exp(self.u_scaled(alpha, r))

    def to_csv(self, path):
        from .io_utils import write_csv

        write_csv(path, ["r", "U", "Uprime"],
                  [self.grid.nodes, self.U, self.Uprime])

    def summary(self) -> dict:
        return {
            "N": self.dim.n,
            "lambda0": self.dim.lambda0,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "num_nodes": len(self.grid.nodes),
            "tol": self.tol,
            "tail_rate": self.tail_rate,
            "tail_amplitude": self.tail_amplitude,
            "max_ode_residual": float(np.max(np.abs(ode_residual(self)))),
        }


@dataclass(frozen=True)
class BifurcationPoint:
    alpha: float
    lam: float
    u_center: float


def _leading_tail_rate(dim: Dimension) -> float:
    n = dim.n
    if n <= 9:
        return 0.5 * (n - 2)
    # slowest tail exponent of the linearization at the far equilibrium
    return 0.5 * ((n - 2) - math.sqrt((n - 2) * (n - 10)))


def integrate_radial(dim: Dimension, s_eval: np.ndarray,
                     tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """(U, r U') at the requested s = log r nodes by direct integration.

    Starts below min(1e-4, first node) from the origin series, so callers
    get integrator-grade values exactly at their own nodes (interpolating a
    tabulated profile onto alien nodes leaves node-scale wiggles that
    pollute differentiated residuals downstream).
    """
    s_eval = np.asarray(s_eval, dtype=float)
    lam0 = dim.lambda0
    nm2 = dim.n - 2
    a, b = series_coefficients(dim)
    s_start = min(math.log(1e-4), s_eval[0] - 0.5)
    r0 = math.exp(s_start)
    y0 = [a * r0 ** 2 + b * r0 ** 4, 2 * a * r0 ** 2 + 4 * b * r0 ** 4]

    def rhs(si, y):
        return [y[1], -nm2 * y[1] - lam0 * np.exp(y[0] + 2.0 * si)]

    # tolerance below tol, and a step cap: the controller would otherwise
    # take 0.1-wide steps over the slow early dynamics whose dense-output
    # interpolant defect, divided by r^2 in the radial residual, dominates
    rtol = min(max(1e-3 * tol, 2.5e-14), 1e-10)
    sol = solve_ivp(rhs, (s_start, s_eval[-1]), y0, t_eval=s_eval,
                    method="DOP853", rtol=rtol, atol=1e-20, max_step=0.025)
    if not sol.success:
        raise RuntimeError(f"radial integration failed: {sol.message}")
    return sol.y[0], sol.y[1]


def solve_profile(dim: Dimension, grid: RadialGrid | None = None,
                  tol: float = 1e-10) -> RadialProfile:
    """Integrate the radial profile on the grid.

    The IVP is solved for (v, v2) = (U(e^s), r U'(r)) with an eighth-order
    adaptive Runge-Kutta method; local tolerances are set two orders below
    `tol` so the tabulated values meet the pointwise residual contract.

    Raises
    ------
    RuntimeError
        If the integrator fails to cover the grid within its step budget.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if grid is None:
        grid = RadialGrid.log_uniform()
    U, v2 = integrate_radial(dim, grid.s, tol=tol)
    Uprime = v2 / grid.nodes
    w_m = float(U[-1] + 2.0 * grid.s[-1])
    return RadialProfile(dim=dim, grid=grid, U=U, Uprime=Uprime, tol=tol,
                         tail_rate=_leading_tail_rate(dim), tail_amplitude=w_m)


def scaled_profile(profile: RadialProfile, alpha: float, r: float) -> float:
    """U_alpha(r); uses the asymptotic tail when alpha*r leaves the grid."""
    return profile.u_scaled(alpha, r)


def lambda_alpha(profile: RadialProfile, alpha: float) -> float:
    """lambda_alpha = lambda0 alpha^2 e^{U(alpha)}."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    lam0 = profile.dim.lambda0
    return lam0 * alpha ** 2 * math.exp(profile.u(alpha))


def u_alpha_ball(profile: RadialProfile, alpha: float, r) -> float:
    """u_alpha(r) = U_alpha(r) - U_alpha(1); zero on the unit sphere."""
    return profile.u_scaled(alpha, r) - profile.u_scaled(alpha, 1.0)


def bifurcation_diagram(profile: RadialProfile, alphas) -> list[BifurcationPoint]:
    """Tabulated (alpha, lambda_alpha, u_alpha(0)) sorted by alpha."""
    alphas = np.sort(np.asarray(alphas, dtype=float))
    if np.any(alphas <= 0):
        raise ValueError("all alphas must be positive")
    pts = []
    for al in alphas:
        lam = lambda_alpha(profile, al)
        # u_alpha(0) = U_alpha(0) - U_alpha(1) = -U(alpha)
        pts.append(BifurcationPoint(alpha=float(al), lam=lam,
                                    u_center=-float(profile.u(al))))
    return pts


def ode_residual(profile: RadialProfile) -> np.ndarray:
    """Pointwise residual of U'' + (N-1)U'/r + lambda0 e^U on interior nodes.

    Evaluated through the first-order system in s with sixth-order central
    differences, then mapped back to the radial form (a factor r^-2), which
    keeps amplification of rounding noise away from the origin.
    """
    s = profile.grid.s
    h = s[1] - s[0]
    v = profile.U
    v2 = profile.grid.nodes * profile.Uprime
    # f'(x_i) ~ (-f[i-3] + 9 f[i-2] - 45 f[i-1] + 45 f[i+1] - 9 f[i+2] + f[i+3]) / 60h
    w = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * h)
    dv2 = np.convolve(v2, w[::-1], mode="valid")
    i = slice(3, len(s) - 3)
    res_s = dv2 + (profile.dim.n - 2) * v2[i] + \
        profile.dim.lambda0 * np.exp(v[i] + 2.0 * s[i])
    return res_s / np.exp(2.0 * s[i])
