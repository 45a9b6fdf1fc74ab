"""Numerical laboratory for the weighted two-phase thin free boundary energy:
weighted grid and quadratures, energy and minimizer, radial monotonicity
diagnostics, circle eigenproblems, blow-up and separation analysis,
symmetrization, and a CSV-first experiment CLI.
"""

from .mesh import (
    Ball,
    Grid,
    GridFunction,
    ProblemParams,
    assemble_stiffness,
    ball_integral,
    sphere_quadrature,
    weight_cell_integral,
    weighted_monomial_integral,
)
from .energy import (
    EnergyBreakdown,
    SmoothingSchedule,
    signed_measures,
    smoothed_energy,
    smoothed_gradient,
    total_energy,
)
from .solver import (
    BoundaryData,
    MinimizerResult,
    SolverError,
    default_schedule,
    lattice_combine,
    minimize,
    solve_aharmonic,
)
from .monotonicity import (
    DegenerateFieldError,
    DiagnosticCurve,
    almgren_frequency,
    default_radii,
    frequency_identity_residuals,
    scaled_dirichlet,
    weiss_energy,
    weiss_gap_vs_integral,
)
from .spherical import (
    ArcDomain,
    SphericalSpectrum,
    courant_fischer_compare,
    homogeneous_field,
    min_positive_degree,
    solve_spectrum,
)
from .blowup import (
    GrowthFit,
    PhaseSets,
    extract_free_boundaries,
    harmonic_measure_bounds,
    homogeneity_exponent,
    nondegeneracy_fit,
    rescale,
    solid_sign_check,
)
from .symmetrize import (
    SymmetrizationReport,
    barrier_curve,
    barrier_energy,
    steiner_symmetrize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
