"""Numerical machinery for -Delta u = lambda e^u on exterior domains.

Subpackages by concern: radial ground profiles and the unit-ball solution
family (:mod:`gelfex.profiles`), the planar dynamical picture
(:mod:`gelfex.phaseplane`), weighted norms (:mod:`gelfex.norms`),
mode-by-mode inversion of the linearised operator (:mod:`gelfex.modes`),
the exterior fixed-point construction (:mod:`gelfex.exterior`), and the
three-dimensional reduction bookkeeping (:mod:`gelfex.reduction`).
"""

from .profiles import (
    BifurcationPoint,
    Dimension,
    RadialGrid,
    RadialProfile,
    bifurcation_diagram,
    lambda_alpha,
    solve_profile,
    u_alpha_ball,
)
from .phaseplane import (
    AsymptoticFit,
    PhaseState,
    Trajectory,
    asymptotic_fit,
    check_orbit_confinement,
    heteroclinic,
    integrate,
    linearization_eigenvalues,
    lyapunov_value,
    oscillation_crossings,
    vector_field,
)
from .norms import WeightedNormParams, beta_range, norm_star, norm_starstar
from .modes import (
    ModeFunction,
    ModeIndex,
    OrthogonalityError,
    homogeneous_z1,
    homogeneous_z2,
    indicial_roots_infinity,
    indicial_roots_origin,
    orthogonality_defect,
    solve_mode,
    sphere_eigenvalue,
)
from .exterior import (
    ExteriorConfig,
    ExteriorSolution,
    HarmonicCorrection,
    NonContractionError,
    assemble_solution,
    capacity_unit_ball,
    error_term,
    fixed_point_solve,
    harmonic_potential,
    linear_inverse_exterior,
    newton_oracle,
    nonlinear_term,
    solution_family,
)
from .reduction import (
    CutoffSpec,
    ReducedField,
    boundary_flux_identity_check,
    cutoff_field,
    projection_coefficients,
    reduced_field_leading,
)

__version__ = "0.1.0"
