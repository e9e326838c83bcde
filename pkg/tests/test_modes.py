import numpy as np
import pytest
from numpy.testing import assert_allclose

from gelfex import modes
from gelfex.modes import (
    OrthogonalityError,
    apply_operator,
    apply_operator_fd,
    homogeneous_pair,
    homogeneous_z1,
    indicial_roots_infinity,
    indicial_roots_origin,
    manufactured_solution,
    mode_grid,
    mode_residual,
    orthogonality_defect,
    project_defect_free,
    random_bump_rhs,
    solve_mode,
    sphere_eigenvalue,
)
from gelfex.norms import (WeightedNormParams, beta_range, grid_norm_star,
                          grid_norm_starstar)
from gelfex.profiles import Dimension


def test_sphere_eigenvalues():
    assert sphere_eigenvalue(Dimension(5), 0).eigenvalue == 0.0
    assert sphere_eigenvalue(Dimension(5), 0).multiplicity == 1
    for n in (3, 4, 10):
        m = sphere_eigenvalue(Dimension(n), 1)
        assert m.eigenvalue == n - 1.0
        assert m.multiplicity == n
    assert sphere_eigenvalue(Dimension(4), 2).eigenvalue == 8.0
    assert sphere_eigenvalue(Dimension(3), 2).multiplicity == 5
    with pytest.raises(ValueError):
        sphere_eigenvalue(Dimension(4), -1)


def test_indicial_roots_origin():
    for n in (3, 4, 10, 12):
        dim = Dimension(n)
        lo, hi = indicial_roots_origin(dim, sphere_eigenvalue(dim, 0))
        assert (lo, hi) == (0.0, float(n - 2))
        lo, hi = indicial_roots_origin(dim, sphere_eigenvalue(dim, 1))
        assert lo == pytest.approx(-1.0, abs=1e-13)
        assert hi == pytest.approx(float(n - 1), abs=1e-13)
    lo, hi = indicial_roots_origin(Dimension(4), sphere_eigenvalue(Dimension(4), 2))
    assert (lo, hi) == (-2.0, 4.0)


def test_indicial_roots_infinity():
    # degree 0 reproduces the far-equilibrium exponents
    for n in (4, 10, 12):
        dim = Dimension(n)
        mu_p, mu_m = indicial_roots_infinity(dim, sphere_eigenvalue(dim, 0))
        disc = (n - 2) * (n - 10)
        ref_p = 0.5 * ((n - 2) + complex(disc) ** 0.5)
        assert abs(mu_p - ref_p) < 1e-12
    # degree 1 in closed form, including the N = 3 labels
    for n in (3, 4, 10):
        dim = Dimension(n)
        mu_p, mu_m = indicial_roots_infinity(dim, sphere_eigenvalue(dim, 1))
        assert mu_p == complex(n - 3.0) and mu_m == complex(1.0)


def test_homogeneous_z1_behavior(long_profiles):
    dim = Dimension(4)
    prof = long_profiles[4]
    z1 = homogeneous_z1(dim, sphere_eigenvalue(dim, 1), prof)
    r = z1.grid
    small = r < 1e-3
    ratios = z1.values[small] / r[small]
    assert np.all(ratios > 0)
    assert np.ptp(ratios) / ratios.mean() < 1e-4  # z1 ~ c0 r near the origin
    # degree 0: positive throughout for N >= 10, sign-changing for N = 3
    z10 = homogeneous_z1(Dimension(10), sphere_eigenvalue(Dimension(10), 0),
                         long_profiles[10])
    assert np.all(z10.values > 0)
    z3 = homogeneous_z1(Dimension(3), sphere_eigenvalue(Dimension(3), 0),
                        long_profiles[3])
    assert z3.values.min() < 0 < z3.values.max()
    with pytest.raises(ValueError):
        homogeneous_z1(dim, sphere_eigenvalue(dim, 2), prof)


def test_homogeneous_identities_residual(long_profiles):
    # the scaling and translation generators satisfy the homogeneous
    # equation to 1e-8 on the tabulation nodes; the radial-form residual
    # divides by r^2, so the window starts where double precision can
    # support the bound at all (the generator values are O(1), and their
    # representation floor alone is ~4e-16 / r^2)
    for n, deg in ((4, 0), (4, 1), (10, 0), (10, 1)):
        dim = Dimension(n)
        prof = long_profiles[n]
        mode = sphere_eigenvalue(dim, deg)
        z1 = homogeneous_z1(dim, mode, prof)
        res = mode_residual(z1, lambda r: 0.0 * np.asarray(r), dim, prof,
                            r_window=(0.1, 100.0))
        assert res <= 1e-8, f"N={n} deg={deg}: {res:.2e}"


def test_homogeneous_pair(long_profiles):
    dim = Dimension(4)
    prof = long_profiles[4]
    pair = homogeneous_pair(dim, sphere_eigenvalue(dim, 0), prof)
    assert pair.wronskian_check < 1e-6
    r = pair.z2.grid
    small = r < 1e-3
    scaled = pair.z2.values[small] * r[small] ** (dim.n - 2)
    assert abs(scaled.mean()) > 0.01  # z2 ~ r^{2-N}
    assert np.ptp(scaled) / abs(scaled.mean()) < 1e-3
    # z2 = O(r^{-(N-2)/2}) at infinity
    tail = (r > 1e2) & (r < 1e3)
    assert np.all(np.abs(pair.z2.values[tail]) * r[tail] ** ((dim.n - 2) / 2) < 10.0)


@pytest.mark.parametrize("n,deg", [(4, 0), (4, 1), (4, 2), (4, 5),
                                   (10, 0), (10, 1), (10, 2), (10, 5),
                                   (3, 0)])
def test_manufactured_recovery(long_profiles, n, deg):
    dim = Dimension(n)
    prof = long_profiles[n]
    params = WeightedNormParams.defaults_for(dim)
    mode = sphere_eigenvalue(dim, deg)
    triple = manufactured_solution(2.0, params.beta)
    h = apply_operator(dim, mode, prof, triple)
    phi = solve_mode(dim, mode, h, prof, params)
    r = phi.grid
    mask = (r >= 0.1) & (r <= 100.0)
    f = triple[0]
    err = np.abs(phi.values - f(r))[mask].max() / np.abs(f(r))[mask].max()
    assert err <= 1e-6, f"recovery {err:.2e}"
    res = mode_residual(phi, h, dim, prof)
    hnorm = grid_norm_starstar(r, h(r), params.beta, params.sigma)
    assert res <= 1e-6 * hnorm


def test_apply_operator_fd_agrees(long_profiles):
    dim = Dimension(4)
    prof = long_profiles[4]
    mode = sphere_eigenvalue(dim, 2)
    triple = manufactured_solution(2.0, 0.5)
    h = apply_operator(dim, mode, prof, triple)
    h_fd = apply_operator_fd(dim, mode, prof, triple[0])
    r = np.geomspace(0.1, 100.0, 100)
    assert_allclose(h_fd(r), h(r), rtol=1e-4, atol=1e-8)


def test_zero_rhs_gives_zero(long_profiles):
    dim = Dimension(4)
    prof = long_profiles[4]
    params = WeightedNormParams.defaults_for(dim)
    zero = lambda r: 0.0 * np.asarray(r)
    for deg in (0, 1, 2):
        phi = solve_mode(dim, sphere_eigenvalue(dim, deg), zero, prof, params)
        assert np.abs(phi.values).max() < 1e-12


def test_linearity(long_profiles):
    dim = Dimension(10)
    prof = long_profiles[10]
    params = WeightedNormParams.defaults_for(dim)
    rng = np.random.default_rng(11)
    h1 = random_bump_rhs(rng, params)
    h2 = random_bump_rhs(rng, params)
    a, b = 0.7, -1.3
    comb = lambda r: a * h1(r) + b * h2(r)
    for deg in (0, 1, 2, 5):
        mode = sphere_eigenvalue(dim, deg)
        p1 = solve_mode(dim, mode, h1, prof, params)
        p2 = solve_mode(dim, mode, h2, prof, params)
        pc = solve_mode(dim, mode, comb, prof, params)
        defect = np.abs(pc.values - (a * p1.values + b * p2.values)).max()
        assert defect <= 1e-8, f"deg={deg}: {defect:.2e}"


def test_solved_modes_decay(long_profiles):
    dim = Dimension(4)
    prof = long_profiles[4]
    params = WeightedNormParams.defaults_for(dim)
    rng = np.random.default_rng(5)
    h = random_bump_rhs(rng, params)
    for deg in (0, 1, 2):
        phi = solve_mode(dim, sphere_eigenvalue(dim, deg), h, prof, params)
        r = phi.grid
        window = (r >= 1.0) & (r <= 100.0)
        weighted = np.abs(phi.values[window]) * r[window] ** params.beta
        assert np.isfinite(weighted).all()
        assert weighted.max() < 10.0 * max(np.abs(phi.values).max(), 1e-12)


def test_barrier_bound_high_degree(long_profiles):
    # |phi| <= C |h|_** / (r^{sigma-2} + r^beta) pointwise for degree >= 2
    dim = Dimension(4)
    prof = long_profiles[4]
    params = WeightedNormParams.defaults_for(dim)
    rng = np.random.default_rng(17)
    for deg in (2, 5):
        mode = sphere_eigenvalue(dim, deg)
        for _ in range(3):
            h = random_bump_rhs(rng, params)
            phi = solve_mode(dim, mode, h, prof, params)
            r = phi.grid
            barrier = 1.0 / (r ** (params.sigma - 2.0) + r ** params.beta)
            ratio = np.abs(phi.values) / barrier
            assert ratio.max() <= 100.0  # empirical constant, h-normalised


def test_norm_bound_stability_battery(long_profiles):
    # empirical inverse-norm stability: max/median <= 10 over 20 random
    # unit-norm right-hand sides per (N, degree) cell.  sigma < 1 here: the
    # degree-one kernel quadrature (origin-normalised) amplifies sources
    # localised at radius c by c^{1-sigma}, so only for sigma < 1 is it a
    # uniformly bounded inverse over the whole weighted class
    for n in (4, 10):
        dim = Dimension(n)
        prof = long_profiles[n]
        lo, hi = beta_range(dim)
        params = WeightedNormParams(beta=0.5 * (lo + hi), sigma=0.9)
        rng = np.random.default_rng(100 + n)
        for deg in (0, 1, 2, 5):
            mode = sphere_eigenvalue(dim, deg)
            norms = []
            for _ in range(20):
                h = random_bump_rhs(rng, params)
                phi = solve_mode(dim, mode, h, prof, params)
                norms.append(grid_norm_star(phi.grid, phi.values, params.beta))
            norms = np.array(norms)
            ratio = norms.max() / np.median(norms)
            assert ratio <= 10.0, f"N={n} deg={deg}: max/median={ratio:.2f}"


def test_orthogonality_defect(long_profiles):
    dim = Dimension(3)
    prof = long_profiles[3]
    zero = lambda r: 0.0 * np.asarray(r)
    assert orthogonality_defect(zero, prof) == 0.0
    # positive integrand: strictly positive defect
    h_pos = lambda r: prof.exp_u(np.asarray(r)) * (-prof.uprime(np.asarray(r)))
    assert orthogonality_defect(h_pos, prof) > 0.0
    # odd-in-log-r pattern about a pivot: defect vanishes by symmetry of
    # the measure z1 h r^2 dr = (z1-even part) * odd * ...; construct by
    # explicit antisymmetrisation of the full integrand
    def h_odd(r):
        r = np.asarray(r, dtype=float)
        t = np.log(r)
        z1 = -prof.uprime(r)
        bump = np.exp(-0.5 * (t / 0.7) ** 2)
        # divide out the measure so the integrand itself is odd in t
        return np.sin(t) * bump / (z1 * r ** 3)

    assert abs(orthogonality_defect(h_odd, prof)) < 1e-10
    with pytest.raises(ValueError):
        orthogonality_defect(zero, long_profiles[4])


def test_projection_restores_decay_and_obstruction(long_profiles):
    dim = Dimension(3)
    prof = long_profiles[3]
    params = WeightedNormParams.defaults_for(dim)
    mode = sphere_eigenvalue(dim, 1)
    h_bad = lambda r: prof.exp_u(np.asarray(r)) * (-prof.uprime(np.asarray(r)))
    with pytest.raises(OrthogonalityError):
        solve_mode(dim, mode, h_bad, prof, params)
    phi_bad = solve_mode(dim, mode, h_bad, prof, params, require_decay=False)
    h_free = project_defect_free(h_bad, prof)
    assert abs(orthogonality_defect(h_free, prof)) < 1e-12
    phi_free = solve_mode(dim, mode, h_free, prof, params)
    r = phi_bad.grid
    i_far = np.argmin(np.abs(r - 1e3))
    # obstructed solve levels off to a constant; projected one keeps decay
    assert abs(phi_bad.values[i_far]) > 10.0 * abs(phi_free.values[i_far])
    weighted = np.abs(phi_free.values) * r
    inner = (r >= 1.0) & (r <= 10.0)
    outer = (r >= 1.0) & (r <= 1e3)
    assert np.isfinite(weighted[outer]).all()
    assert weighted[outer].max() <= 50.0 * weighted[inner].max()
    # the obstructed solution approaches a nonzero constant at infinity
    i_mid = np.argmin(np.abs(r - 500.0))
    assert phi_bad.values[i_far] == pytest.approx(phi_bad.values[i_mid], rel=0.1)


def test_mode_grid_alignment(long_profiles):
    prof = long_profiles[4]
    g = mode_grid(prof)
    assert g[0] == prof.grid.nodes[0]
    assert g[-1] <= 1e3 * (1 + 1e-12)
    assert np.all(np.isin(g, prof.grid.nodes))
