"""Acceptance battery: one test per criterion, one printed line per check.

Run with `pytest -s tests/test_acceptance.py` to see the PASS/FAIL lines.
Criterion 9's norm-scaling sub-check is expected to fail at the pinned
parameter point alpha = 1 (see the failure message and the Known
limitations section of the README); everything else is green.
"""

import math

import numpy as np
import pytest

from gelfex import modes
from gelfex.exterior import (
    ExteriorConfig,
    capacity_unit_ball,
    fixed_point_solve,
    newton_oracle,
    solution_family,
)
from gelfex.norms import WeightedNormParams, beta_range, grid_norm_star
from gelfex.phaseplane import (
    asymptotic_fit,
    check_orbit_confinement,
    convergence_time,
    integrate,
    linearization_eigenvalues,
    oscillation_crossings,
)
from gelfex.profiles import Dimension, lambda_alpha
from gelfex.reduction import reduced_field_leading


def _report(label, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, f"{label}: {detail}"


def test_criterion_01_heteroclinic_connection(orbits):
    for n in (3, 4, 10, 12):
        traj = orbits[n]
        restart = integrate(traj.state(-5.0), traj.dim, 40.0, ds=0.005)
        arrived = convergence_time(restart, tol=1e-6, span=1.0)
        _report("criterion 1 (heteroclinic connection)",
                arrived is not None and arrived <= 40.0,
                f"N={n}: within 1e-6 of the attractor by s={arrived}")


def test_criterion_02_confinement_box(orbits):
    for n in (10, 12):
        rep = check_orbit_confinement(orbits[n])
        _report("criterion 2 (confinement, high dim)", rep.passed,
                f"N={n}: v1 in ({rep.min_v1:.3g}, {rep.max_v1:.6f}), "
                f"v2 in ({rep.min_v2:.6f}, {rep.max_v2:.3g}), "
                f"worst violation {rep.max_violation:.1e}")
    rep3 = check_orbit_confinement(orbits[3])
    crossings = oscillation_crossings(orbits[3])
    in_window = crossings[(crossings >= -10.0) & (crossings <= 40.0)]
    _report("criterion 2 (oscillation witness, N=3)",
            (not rep3.passed) and len(in_window) >= 5,
            f"bound fails as required; {len(in_window)} crossings of "
            f"v1=lambda0 in [-10, 40]")


def test_criterion_03_tail_expansions(orbits):
    fit10 = asymptotic_fit(orbits[10])
    traj = orbits[10]
    hold_ok = True
    for s0 in np.linspace(fit10.window[0] + 0.5, fit10.window[1] - 0.5, 2):
        i = np.argmin(np.abs(traj.s - s0))
        pred = (fit10.a + fit10.b * traj.s[i]) * math.exp(-4.0 * traj.s[i])
        hold_ok &= abs(pred - traj.w[i]) <= 0.05 * abs(traj.w[i])
    _report("criterion 3 (resonant fit, N=10)",
            fit10.b < 0 and fit10.includes_log_factor and hold_ok,
            f"b={fit10.b:.3f} < 0 with log factor, hold-out within 5%")
    for n in range(3, 10):
        fit = asymptotic_fit(orbits[n])
        target = 0.5 * (n - 2)
        ok = abs(fit.rate_primary - target) <= 0.1 * target
        _report("criterion 3 (envelope rate)", ok,
                f"N={n}: rate {fit.rate_primary:.4f} vs {target} "
                f"({abs(fit.rate_primary - target) / target:.1%})")


def test_criterion_04_eigenvalues_indicial_roots():
    mu_p, mu_m = linearization_eigenvalues(Dimension(11))
    _report("criterion 4 (far-point eigenvalues, N=11)",
            mu_p == -3.0 and mu_m == -6.0, f"({mu_p}, {mu_m}) exactly")
    worst = 0.0
    for n in range(3, 13):
        dim = Dimension(n)
        m0 = modes.sphere_eigenvalue(dim, 0)
        m1 = modes.sphere_eigenvalue(dim, 1)
        lo, hi = modes.indicial_roots_origin(dim, m0)
        worst = max(worst, abs(lo - 0.0), abs(hi - (n - 2.0)))
        lo, hi = modes.indicial_roots_origin(dim, m1)
        worst = max(worst, abs(lo + 1.0), abs(hi - (n - 1.0)))
        p, m = modes.indicial_roots_infinity(dim, m0)
        disc = complex((n - 2) * (n - 10))
        worst = max(worst, abs(p - 0.5 * ((n - 2) + disc ** 0.5)),
                    abs(m - 0.5 * ((n - 2) - disc ** 0.5)))
        p, m = modes.indicial_roots_infinity(dim, m1)
        worst = max(worst, abs(p - (n - 3.0)), abs(m - 1.0))
    _report("criterion 4 (indicial closed forms)", worst <= 1e-12,
            f"N in 3..12, degrees 0..1: worst deviation {worst:.2e}")


def test_criterion_05_lambda_curve(profiles, orbits):
    worst = 0.0
    for n in (3, 4, 10, 12):
        for alpha in (0.1, 1.0, 10.0):
            lam = lambda_alpha(profiles[n], alpha)
            v1 = orbits[n].state(math.log(alpha)).v1
            worst = max(worst, abs(lam - v1))
    _report("criterion 5 (phase identity)", worst <= 1e-6,
            f"|lambda_alpha - v1(log alpha)| worst {worst:.2e}")
    for n in (10, 12):
        prof = profiles[n]
        lam0 = prof.dim.lambda0
        lam100 = lambda_alpha(prof, 100.0)
        below = all(lambda_alpha(prof, a) < lam0
                    for a in np.geomspace(0.01, 100.0, 40))
        _report("criterion 5 (limit and bound)",
                abs(lam100 - lam0) <= 0.05 * lam0 and below,
                f"N={n}: lambda_100={lam100:.6f} vs {lam0} and strictly below")


def test_criterion_06_mode_solver(long_profiles):
    worst_rec = 0.0
    for n in (4, 10):
        dim = Dimension(n)
        prof = long_profiles[n]
        params = WeightedNormParams.defaults_for(dim)
        triple = modes.manufactured_solution(2.0, params.beta)
        for deg in (0, 1, 2, 5):
            mode = modes.sphere_eigenvalue(dim, deg)
            h = modes.apply_operator(dim, mode, prof, triple)
            phi = modes.solve_mode(dim, mode, h, prof, params)
            r = phi.grid
            mask = (r >= 0.1) & (r <= 100.0)
            f = triple[0]
            err = np.abs(phi.values - f(r))[mask].max() \
                / np.abs(f(r))[mask].max()
            worst_rec = max(worst_rec, err)
            assert err <= 1e-6, f"N={n} deg={deg}: {err:.2e}"
    _report("criterion 6 (manufactured recovery)", worst_rec <= 1e-6,
            f"8 cells, worst relative error {worst_rec:.2e}")

    dim = Dimension(4)
    prof = long_profiles[4]
    params = WeightedNormParams.defaults_for(dim)
    rng = np.random.default_rng(21)
    h1 = modes.random_bump_rhs(rng, params)
    h2 = modes.random_bump_rhs(rng, params)
    worst_lin = 0.0
    for deg in (0, 1, 2, 5):
        mode = modes.sphere_eigenvalue(dim, deg)
        p1 = modes.solve_mode(dim, mode, h1, prof, params)
        p2 = modes.solve_mode(dim, mode, h2, prof, params)
        pc = modes.solve_mode(dim, mode,
                              lambda r: 0.6 * h1(r) - 1.1 * h2(r),
                              prof, params)
        worst_lin = max(worst_lin, np.abs(
            pc.values - (0.6 * p1.values - 1.1 * p2.values)).max())
    _report("criterion 6 (linearity)", worst_lin <= 1e-8,
            f"worst defect {worst_lin:.2e}")


def test_criterion_07_inverse_norm_stability(long_profiles):
    # sigma = 0.9: the degree-one kernel quadrature is a uniformly bounded
    # inverse only for sigma < 1 (origin-localised sources respond like
    # c^{1-sigma}); within that range the spread stays modest and flat in
    # the degree, which is the content being verified
    for n in (4, 10):
        dim = Dimension(n)
        prof = long_profiles[n]
        lo, hi = beta_range(dim)
        params = WeightedNormParams(beta=0.5 * (lo + hi), sigma=0.9)
        rng = np.random.default_rng(100 + n)
        for deg in (0, 1, 2, 5):
            mode = modes.sphere_eigenvalue(dim, deg)
            norms = []
            for _ in range(20):
                h = modes.random_bump_rhs(rng, params)
                phi = modes.solve_mode(dim, mode, h, prof, params)
                norms.append(grid_norm_star(phi.grid, phi.values, params.beta))
            norms = np.array(norms)
            ratio = norms.max() / np.median(norms)
            _report("criterion 7 (norm-bound stability)", ratio <= 10.0,
                    f"N={n} deg={deg}: max/median {ratio:.2f} over 20 draws")


def test_criterion_08_dimension_three_obstruction(long_profiles):
    dim = Dimension(3)
    prof = long_profiles[3]
    params = WeightedNormParams.defaults_for(dim)
    mode = modes.sphere_eigenvalue(dim, 1)

    def h_bad(r):
        r = np.asarray(r, dtype=float)
        return prof.exp_u(r) * (-prof.uprime(r))

    defect = modes.orthogonality_defect(h_bad, prof)
    phi_bad = modes.solve_mode(dim, mode, h_bad, prof, params,
                               require_decay=False)
    h_free = modes.project_defect_free(h_bad, prof)
    phi_free = modes.solve_mode(dim, mode, h_free, prof, params)
    r = phi_bad.grid
    i_far = np.argmin(np.abs(r - 1e3))
    ratio = abs(phi_bad.values[i_far]) / max(abs(phi_free.values[i_far]), 1e-300)
    _report("criterion 8 (nonzero defect forces a constant)",
            defect > 0 and ratio > 10.0,
            f"defect {defect:.3e}; |phi(1e3)| ratio obstructed/projected "
            f"{ratio:.1f}")
    weighted = np.abs(phi_free.values) * r
    outer = (r >= 1.0) & (r <= 1e3)
    inner = (r >= 1.0) & (r <= 10.0)
    bounded = np.isfinite(weighted[outer]).all() and \
        weighted[outer].max() <= 50.0 * weighted[inner].max()
    _report("criterion 8 (defect-free solve decays)", bounded,
            f"sup r|phi| on [1,1e3] = {weighted[outer].max():.3e} "
            f"(vs {weighted[inner].max():.3e} on [1,10])")


@pytest.fixture(scope="module")
def exterior_runs(profiles):
    prof = profiles[4]
    runs = {}
    for lam in (1e-3, 1e-4, 1e-5):
        cfg = ExteriorConfig(dim=Dimension(4), alpha=1.0, lam=lam)
        runs[lam] = (fixed_point_solve(cfg, prof), newton_oracle(cfg, prof))
    return runs


def test_criterion_09_exterior_construction(exterior_runs):
    for lam, (sol, _) in exterior_runs.items():
        ok = (all(q < 0.5 for q in sol.contraction_ratios)
              and sol.u[0] == 0.0
              and sol.residual_max <= 1e-8)
        target = -math.log(lam / sol.config.dim.lambda0)
        cerr = abs(sol.asymptotic_constant - target) / abs(target)
        _report("criterion 9 (construction)", ok and cerr <= 0.02,
                f"lam={lam:.0e}: ratios {[f'{q:.1e}' for q in sol.contraction_ratios]}, "
                f"residual {sol.residual_max:.1e}, constant error {cerr:.2%}")


def test_criterion_09_norm_scaling_slopes(exterior_runs, profiles):
    # diagnostic: the scaling content of the construction holds off the
    # degenerate parameter point (alpha = 2)
    lams = np.array([1e-3, 1e-4, 1e-5])
    prof = profiles[4]
    off = [fixed_point_solve(ExteriorConfig(dim=Dimension(4), alpha=2.0,
                                            lam=lam), prof) for lam in lams]
    sig_half = off[0].config.sigma / 2.0
    slope_phi2 = np.polyfit(np.log(lams),
                            np.log([s.phi_norm_star for s in off]), 1)[0]
    slope_e2 = np.polyfit(np.log(lams),
                          np.log([s.error_norm_starstar for s in off]), 1)[0]
    print(f"[info] criterion 9 diagnostic at alpha=2: phi slope "
          f"{slope_phi2:.3f}, error slope {slope_e2:.3f} "
          f"(sigma/2 = {sig_half}, band +-20%)")
    assert abs(slope_phi2 - sig_half) <= 0.2 * sig_half
    assert abs(slope_e2 - sig_half) <= 0.2 * sig_half

    # the pinned point alpha = 1: the boundary trace U_alpha(eps) is O(lam)
    # rather than O(1), which shifts both norms by one full power of lambda;
    # the required sigma/2 band cannot contain them for any admissible sigma,
    # so this check is expected to fail at this parameter point
    sols = [exterior_runs[lam][0] for lam in lams]
    slope_phi = np.polyfit(np.log(lams),
                           np.log([s.phi_norm_star for s in sols]), 1)[0]
    slope_e = np.polyfit(np.log(lams),
                         np.log([s.error_norm_starstar for s in sols]), 1)[0]
    ok = (abs(slope_phi - sig_half) <= 0.2 * sig_half
          and abs(slope_e - sig_half) <= 0.2 * sig_half)
    _report(
        "criterion 9 (norm scaling at alpha=1)", ok,
        f"slopes phi {slope_phi:.3f}, error {slope_e:.3f} vs required "
        f"sigma/2 = {sig_half} +- 20%; both sit at sigma/2 + 1 because the "
        "boundary trace U_alpha(eps) is O(lambda) at alpha=1, xi=0, which "
        "degenerates the scaling; no admissible sigma satisfies the stated "
        "band at this parameter point (see README, Known limitations)")


def test_criterion_10_two_path_agreement(exterior_runs):
    for lam, (sol, newt) in exterior_runs.items():
        diff = float(np.abs(sol.u - newt.u).max())
        _report("criterion 10 (two-path agreement)", diff <= 1e-6,
                f"lam={lam:.0e}: sup difference {diff:.2e}")


def test_criterion_11_solution_continuum(profiles):
    dim = Dimension(3)
    prof = profiles[3]
    lam = lambda_alpha(prof, 1.0)
    target = -math.log(lam / dim.lambda0)
    v2_special = prof.uprime(1.0)
    for dv in (0.0, -0.02, 0.02):
        member = solution_family(dim, lam, v2_special + dv)
        err = abs(member.asymptotic_constant - target) / abs(target)
        _report("criterion 11 (solution continuum)", err <= 0.02,
                f"v2 offset {dv:+.2f}: constant {member.asymptotic_constant:.5f} "
                f"vs -log(lam/2) = {target:.5f} ({err:.2%})")


def test_criterion_12_reduced_field(profiles):
    prof = profiles[3]
    lam = 1e-4
    g0 = np.linalg.norm(reduced_field_leading((0.0, 0.0, 0.0), lam, prof, 1.0).G)
    _report("criterion 12 (centre value)", g0 <= 1e-8, f"|G(0)| = {g0:.1e}")
    rng = np.random.default_rng(12)
    worst_dot = -np.inf
    for _ in range(6):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        f = reduced_field_leading(0.5 * d, lam, prof, 1.0)
        worst_dot = max(worst_dot, f.dot_sign)
    _report("criterion 12 (inward field)", worst_dot < 0.0,
            f"max G.xi over 6 directions {worst_dot:.3e}")
    xi = (0.4, 0.1, -0.2)
    g_hi = np.linalg.norm(reduced_field_leading(xi, 1e-2, prof, 1.0).G)
    g_lo = np.linalg.norm(reduced_field_leading(xi, 1e-4, prof, 1.0).G)
    slope = (math.log(g_hi) - math.log(g_lo)) / (math.log(1e-2) - math.log(1e-4))
    _report("criterion 12 (sqrt-lambda scaling)", abs(slope - 0.5) <= 0.02,
            f"slope {slope:.4f}")
    base = np.asarray(reduced_field_leading((0.5, 0.0, 0.0), lam, prof, 1.0).G)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    rot = reduced_field_leading(tuple(q @ [0.5, 0.0, 0.0]), lam, prof, 1.0)
    defect = np.linalg.norm(np.asarray(rot.G) - q @ base)
    _report("criterion 12 (equivariance)",
            defect <= max(rot.quadrature_error, 1e-12),
            f"defect {defect:.2e} vs quadrature error {rot.quadrature_error:.2e}")


def test_criterion_13_capacity():
    limit, quad = capacity_unit_ball(Dimension(3))
    _report("criterion 13 (capacity identity)",
            limit == 1.0 and abs(quad - limit) <= 1e-4,
            f"f0 = {limit}, energy quadrature {quad:.8f}")
