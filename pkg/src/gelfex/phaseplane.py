"""Planar autonomous system behind the radial equation, in (v1, v2) variables.

With v(s) = u(e^s), v1 = lambda e^{v+2s} and v2 = v', the radial equation
becomes the autonomous system

    v1' = v1 (v2 + 2),      v2' = -v1 - (N-2) v2,

whose equilibria are (0, 0) (saddle) and (lambda0, -2) (spiral for
3 <= N <= 9, stable node for N >= 10).  The ground profile traces the
heteroclinic orbit joining them; descent of

    L(v1, v2) = (v2+2)^2/2 + v1 - lambda0 log v1

certifies forward completeness.  This module integrates orbits (internally in
(log v1, v2), which keeps v1 positive by construction), classifies the
equilibria, verifies the confinement box 0 < v1 < lambda0, -2 < v2 < 0 for
N >= 10, counts oscillation crossings for N <= 9, and fits the tail expansion
of w = v + 2s, including the resonant s e^{-4s} form in dimension ten.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from .profiles import Dimension, RadialProfile

__all__ = [
    "PhaseState",
    "Trajectory",
    "EquilibriumReport",
    "ConfinementReport",
    "AsymptoticFit",
    "BlowUpError",
    "vector_field",
    "integrate",
    "linearization_eigenvalues",
    "classify_equilibria",
    "lyapunov_value",
    "heteroclinic",
    "check_orbit_confinement",
    "oscillation_crossings",
    "asymptotic_fit",
    "convergence_time",
]

# orbit states closer to the attracting equilibrium than this are at the
# floating-point floor; strict inequalities are not meaningful there
EQUILIBRIUM_NOISE_FLOOR = 1e-8

OVERFLOW_GUARD = 1e8


class BlowUpError(RuntimeError):
    """Orbit left the overflow guard; carries the last valid s."""

    def __init__(self, s_last: float):
        super().__init__(f"orbit blew up near s = {s_last:.6g}")
        self.s_last = s_last


@dataclass(frozen=True)
class PhaseState:
    v1: float
    v2: float
    s: float = 0.0

    def __post_init__(self):
        if not self.v1 > 0:
            raise ValueError("v1 must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Orbit samples with strictly increasing s; v1 > 0 everywhere."""

    dim: Dimension
    s: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    lambda_tag: float

    def __post_init__(self):
        for name in ("s", "v1", "v2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("s must be strictly increasing")
        if np.any(self.v1 <= 0):
            raise ValueError("v1 must stay positive")

    def __len__(self):
        return len(self.s)

    def state(self, s: float) -> PhaseState:
        return PhaseState(float(self._v1_of_s(s)), float(self._v2_of_s(s)), s)

    @cached_property
    def _v1_of_s(self):
        return CubicSpline(self.s, self.v1)

    @cached_property
    def _v2_of_s(self):
        return CubicSpline(self.s, self.v2)

    @property
    def w(self) -> np.ndarray:
        """w = v + 2s = log(v1 / lambda_tag) along the orbit."""
        return np.log(self.v1 / self.lambda_tag)

    def lyapunov(self) -> np.ndarray:
        lam0 = self.dim.lambda0
        return 0.5 * (self.v2 + 2.0) ** 2 + self.v1 - lam0 * np.log(self.v1)

    def distance_to_attractor(self) -> np.ndarray:
        lam0 = self.dim.lambda0
        return np.hypot(self.v1 - lam0, self.v2 + 2.0)

    def to_csv(self, path):
        from .io_utils import write_csv

        write_csv(path, ["s", "v1", "v2", "lyapunov"],
                  [self.s, self.v1, self.v2, self.lyapunov()])


def vector_field(state, dim: Dimension) -> tuple[float, float]:
    """Right-hand side (v1(v2+2), -v1-(N-2)v2) at a state or (v1, v2) pair."""
    if isinstance(state, PhaseState):
        v1, v2 = state.v1, state.v2
    else:
        v1, v2 = state
    return (v1 * (v2 + 2.0), -v1 - (dim.n - 2) * v2)


def lyapunov_value(state, dim: Dimension) -> float:
    """Descent function (v2+2)^2/2 + v1 - lambda0 log v1 (lambda-independent)."""
    if isinstance(state, PhaseState):
        v1, v2 = state.v1, state.v2
    else:
        v1, v2 = state
    if v1 <= 0:
        raise ValueError("v1 must be positive")
    return 0.5 * (v2 + 2.0) ** 2 + v1 - dim.lambda0 * math.log(v1)


def linearization_eigenvalues(dim: Dimension) -> tuple[complex, complex]:
    """Eigenvalues at (lambda0, -2): -(N-2)/2 +- sqrt((N-2)(N-10))/2.

    Returned as (mu_plus, mu_minus); real for N >= 10, a conjugate pair for
    3 <= N <= 9.  Real results are returned as real-valued complex numbers.
    """
    n = dim.n
    half = 0.5 * (n - 2)
    disc = (n - 2) * (n - 10)
    root = cmath.sqrt(disc)
    return (-half + 0.5 * root, -half - 0.5 * root)


@dataclass(frozen=True)
class EquilibriumReport:
    point: tuple[float, float]
    kind: str  # saddle | spiral | stable-node | degenerate-node
    eigenvalues: tuple[complex, complex]


def classify_equilibria(dim: Dimension) -> tuple[EquilibriumReport, EquilibriumReport]:
    """Reports for (0,0) and (lambda0,-2) with eigenvalue-consistent kinds."""
    n = dim.n
    origin = EquilibriumReport(point=(0.0, 0.0), kind="saddle",
                               eigenvalues=(complex(2.0), complex(-(n - 2))))
    mu_p, mu_m = linearization_eigenvalues(dim)
    if n <= 9:
        kind = "spiral"
    elif n == 10:
        kind = "degenerate-node"
    else:
        kind = "stable-node"
    far = EquilibriumReport(point=(dim.lambda0, -2.0), kind=kind,
                            eigenvalues=(mu_p, mu_m))
    return origin, far


def integrate(start: PhaseState, dim: Dimension, s_end: float,
              tol: float = 1e-12, ds: float = 0.01,
              lambda_tag: float | None = None) -> Trajectory:
    """Integrate the system forward from `start` to s_end.

    Works in (log v1, v2) so positivity of v1 is structural.  Raises
    :class:`BlowUpError` when v1 crosses the overflow guard; the exception
    carries the last valid s so callers can report divergent family members.
    `lambda_tag` records which lambda links v1 back to v; it defaults to
    lambda0 (the ground-profile correspondence).
    """
    if s_end <= start.s:
        raise ValueError("s_end must exceed start.s")
    nm2 = dim.n - 2

    def rhs(si, y):
        return [y[1] + 2.0, -math.exp(min(y[0], 700.0)) - nm2 * y[1]]

    def blow_up(si, y):
        return y[0] - math.log(OVERFLOW_GUARD)

    blow_up.terminal = True
    blow_up.direction = 1.0
    s_eval = np.arange(start.s, s_end + 0.5 * ds, ds)
    s_eval[-1] = min(s_eval[-1], s_end)
    sol = solve_ivp(rhs, (start.s, s_end), [math.log(start.v1), start.v2],
                    t_eval=s_eval, method="DOP853", rtol=tol, atol=1e-14,
                    events=blow_up)
    if sol.status == 1:  # blow-up event fired
        raise BlowUpError(float(sol.t_events[0][0]))
    if not sol.success:
        raise RuntimeError(f"orbit integration failed: {sol.message}")
    return Trajectory(dim=dim, s=sol.t, v1=np.exp(sol.y[0]), v2=sol.y[1],
                      lambda_tag=dim.lambda0 if lambda_tag is None else lambda_tag)


def heteroclinic(profile: RadialProfile, s_end: float = 40.0) -> Trajectory:
    """Orbit of the ground profile: (v1, v2)(s) = (lambda0 e^U r^2, r U').

    The portion covered by the profile grid is mapped through the change of
    variables; past the grid the orbit is continued by direct integration
    from the last mapped state (the saddle end is only reachable
    asymptotically, so no attempt is made to start at it).
    """
    lam0 = profile.dim.lambda0
    s_grid = profile.grid.s
    v = profile.U
    v2 = profile.grid.nodes * profile.Uprime
    v1 = lam0 * np.exp(v + 2.0 * s_grid)
    if s_end <= s_grid[-1]:
        keep = s_grid <= s_end
        return Trajectory(dim=profile.dim, s=s_grid[keep], v1=v1[keep],
                          v2=v2[keep], lambda_tag=lam0)
    start = PhaseState(float(v1[-1]), float(v2[-1]), float(s_grid[-1]))
    ext = integrate(start, profile.dim, s_end, ds=0.005)
    return Trajectory(dim=profile.dim,
                      s=np.concatenate([s_grid, ext.s[1:]]),
                      v1=np.concatenate([v1, ext.v1[1:]]),
                      v2=np.concatenate([v2, ext.v2[1:]]),
                      lambda_tag=lam0)


def convergence_time(traj: Trajectory, tol: float = 1e-6,
                     span: float = 1.0) -> float | None:
    """First s with distance to (lambda0,-2) below tol, sustained over `span`.

    Spiral orbits re-approach the equilibrium repeatedly, hence the sustained
    window.  Returns None if the orbit never settles.
    """
    d = traj.distance_to_attractor()
    below = d < tol
    idx = np.nonzero(below)[0]
    for i in idx:
        j = np.searchsorted(traj.s, traj.s[i] + span)
        if j > len(traj.s) - 1:
            if below[i:].all() and traj.s[-1] >= traj.s[i] + 0.5 * span:
                return float(traj.s[i])
            break
        if below[i:j + 1].all():
            return float(traj.s[i])
    return None


@dataclass(frozen=True)
class ConfinementReport:
    """Extremes of an orbit against the box (0, lambda0) x (-2, 0)."""

    min_v1: float
    max_v1: float
    min_v2: float
    max_v2: float
    passed: bool
    noise_floor: float
    max_violation: float


def check_orbit_confinement(traj: Trajectory) -> ConfinementReport:
    """Check 0 < v1 < lambda0 and -2 < v2 < 0 along the orbit.

    States within ``EQUILIBRIUM_NOISE_FLOOR`` of the attracting equilibrium
    sit at the double-precision floor where the strict inequalities carry no
    information; there the bounds are only required up to the floor.  Either
    way a genuine excursion (the oscillatory dimensions) is detected.
    """
    lam0 = traj.dim.lambda0
    d = traj.distance_to_attractor()
    away = d > EQUILIBRIUM_NOISE_FLOOR
    viol = np.maximum.reduce([
        traj.v1 - lam0,          # v1 < lambda0
        -traj.v1,                # v1 > 0
        traj.v2,                 # v2 < 0
        -2.0 - traj.v2,          # v2 > -2
    ])
    strict_ok = bool(np.all(viol[away] < 0.0)) if away.any() else True
    near_ok = bool(np.all(viol[~away] <= EQUILIBRIUM_NOISE_FLOOR))
    return ConfinementReport(
        min_v1=float(traj.v1.min()), max_v1=float(traj.v1.max()),
        min_v2=float(traj.v2.min()), max_v2=float(traj.v2.max()),
        passed=strict_ok and near_ok,
        noise_floor=EQUILIBRIUM_NOISE_FLOOR,
        max_violation=float(viol.max()),
    )


def oscillation_crossings(traj: Trajectory) -> np.ndarray:
    """s-values where v1 - lambda0 changes sign, by linear interpolation.

    Sign changes with both neighbours inside the crossing noise floor are
    indistinguishable from integrator noise (the converged tail of a node
    orbit flips sign at the <= 4e-10 level) and are not counted; genuine
    spiral swings stay orders of magnitude above the floor on any window
    where they are resolvable at all.
    """
    lam0 = traj.dim.lambda0
    f = traj.v1 - lam0
    floor = 1e-10 * max(1.0, lam0)
    sign = np.sign(f)
    flips = sign[:-1] * sign[1:] < 0
    resolved = np.maximum(np.abs(f[:-1]), np.abs(f[1:])) > floor
    idx = np.nonzero(flips & resolved)[0]
    s0, s1 = traj.s[idx], traj.s[idx + 1]
    f0, f1 = f[idx], f[idx + 1]
    return s0 + (s1 - s0) * (-f0) / (f1 - f0)


@dataclass(frozen=True)
class AsymptoticFit:
    """Fitted tail of w = v + 2s.

    For N >= 10 the model is w ~ a E_1(s) + b s e^{mu_plus s} with E_1 the
    dimension-appropriate first basis function; ``b < 0`` there.  For
    3 <= N <= 9 the model is a decaying oscillation amplitude*e^{-rate s}
    cos(omega s + phase); then a is the amplitude, b the phase,
    rate_secondary the angular frequency.  ``residual`` is the relative sup
    misfit on the window; for N > 10 ``residual_alt`` reports the alternative
    ansatz a e^{mu_plus s} + b s e^{mu_plus s}.
    """

    a: float
    b: float
    rate_primary: float
    rate_secondary: float
    includes_log_factor: bool
    residual: float
    window: tuple[float, float]
    residual_alt: float | None = None
    alt_coefficients: tuple[float, float] | None = None

    def summary(self) -> dict:
        out = {
            "a": self.a, "b": self.b,
            "rate_primary": self.rate_primary,
            "rate_secondary": self.rate_secondary,
            "includes_log_factor": self.includes_log_factor,
            "residual": self.residual,
            "window": list(self.window),
        }
        if self.residual_alt is not None:
            out["residual_alt"] = self.residual_alt
            out["alt_coefficients"] = list(self.alt_coefficients)
        return out


def _tail_window(traj: Trajectory, lo: float = 1e-9, hi: float = 1e-3,
                 s_min: float = 0.5):
    """Indices where |w| sits between the noise floor and the transient.

    The nominal window [s_max-15, s_max] is useless for N >= 4: the tail
    drops below the double-precision integration noise long before s_max, so
    the window adapts to where the signal actually lives.
    """
    w = traj.w
    mask = (np.abs(w) > lo) & (np.abs(w) < hi) & (traj.s > s_min)
    idx = np.nonzero(mask)[0]
    if len(idx) < 32:
        raise ValueError("insufficient tail data for an asymptotic fit")
    return idx


def _fit_oscillatory(traj: Trajectory) -> AsymptoticFit:
    n = traj.dim.n
    rate_th = 0.5 * (n - 2)
    omega_th = 0.5 * math.sqrt((n - 2) * (10 - n)) if n < 10 else 0.0
    idx = _tail_window(traj, lo=1e-10, hi=0.02, s_min=1.0)
    s, w = traj.s[idx], traj.w[idx]

    def proj_resid(params):
        rate, omega = params
        env = np.exp(-rate * (s - s[0]))
        basis = np.stack([env * np.cos(omega * s), env * np.sin(omega * s)], axis=1)
        coef, *_ = np.linalg.lstsq(basis, w, rcond=None)
        return float(((basis @ coef - w) ** 2).sum()), coef, basis

    # variable projection: (rate, omega) nonlinear, amplitude/phase linear
    best = None
    for rr in np.linspace(0.4 * rate_th, 1.8 * rate_th, 17):
        for om in np.linspace(0.6 * omega_th, 1.4 * omega_th, 17):
            val = proj_resid((rr, om))[0]
            if best is None or val < best[1]:
                best = ((rr, om), val)
    res = minimize(lambda p: proj_resid(p)[0], best[0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-22, "maxiter": 4000})
    rate, omega = res.x
    _, coef, basis = proj_resid(res.x)
    amp = math.hypot(*coef) * math.exp(rate * s[0])
    phase = math.atan2(-coef[1], coef[0])
    rel = float(np.abs(basis @ coef - w).max() / np.abs(w).max())
    return AsymptoticFit(a=amp, b=phase, rate_primary=float(rate),
                         rate_secondary=float(omega), includes_log_factor=False,
                         residual=rel, window=(float(s[0]), float(s[-1])))


def _fit_node(traj: Trajectory) -> AsymptoticFit:
    n = traj.dim.n
    mu_p, mu_m = linearization_eigenvalues(traj.dim)
    mu_p, mu_m = mu_p.real, mu_m.real
    idx = _tail_window(traj)
    s, w = traj.s[idx], traj.w[idx]
    resonant = n == 10
    first = np.exp(mu_m * s) if not resonant else np.exp(mu_p * s)
    basis = np.stack([first, s * np.exp(mu_p * s)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, w, rcond=None)
    rel = float(np.abs(basis @ coef - w).max() / np.abs(w).max())
    fit = AsymptoticFit(a=float(coef[0]), b=float(coef[1]),
                        rate_primary=abs(mu_p), rate_secondary=abs(mu_m),
                        includes_log_factor=True,  # the s factor is log r
                        residual=rel, window=(float(s[0]), float(s[-1])))
    if resonant:
        return fit
    # non-resonant: also fit both terms on the slow rate and report both
    basis2 = np.stack([np.exp(mu_p * s), s * np.exp(mu_p * s)], axis=1)
    coef2, *_ = np.linalg.lstsq(basis2, w, rcond=None)
    rel2 = float(np.abs(basis2 @ coef2 - w).max() / np.abs(w).max())
    return AsymptoticFit(a=fit.a, b=fit.b, rate_primary=fit.rate_primary,
                         rate_secondary=fit.rate_secondary,
                         includes_log_factor=False, residual=fit.residual,
                         window=fit.window, residual_alt=rel2,
                         alt_coefficients=(float(coef2[0]), float(coef2[1])))


def asymptotic_fit(traj: Trajectory) -> AsymptoticFit:
    """Least-squares fit of the tail of w = v + 2s on an adaptive window.

    Dimension split: decaying oscillation for 3 <= N <= 9; (a + b s) e^{-4s}
    at the resonance N = 10; for N > 10 both the stated two-rate ansatz and
    the single-rate alternative are fitted and both residuals reported (the
    two-rate form mixes a subdominant term; see the fit residuals).
    """
    if traj.s[-1] < 30.0:
        raise ValueError("trajectory must extend to s >= 30")
    if traj.dim.n <= 9:
        return _fit_oscillatory(traj)
    return _fit_node(traj)
