"""Matrix Riemann-Hilbert problems on composed Carleson jump contours.

Contour geometry with Carleson/Muckenhoupt estimators, graded panel grids,
discretized Cauchy singular operators and Sokhotski-Plemelj projections, a
Beals-Coifman solver with reconstruction and diagnostics, and a verifier
for the operator identities and the contour-deformation equivalence.
"""

from .fields import MatrixField, NormSpec
from .geometry import (
    AmbiguousLocationError,
    Arc,
    ConditioningWarning,
    ContourError,
    JumpContour,
    MobiusMap,
    build_arc,
    carleson_constant,
    chart_map,
    compose_contour,
    locate,
    mobius_apply,
    muckenhoupt_estimate,
    reverse_subcontour,
    winding_number,
)
from .grid import QuadratureGrid, build_grid, panel_breakpoints
from .operators import (
    MobiusChart,
    NearBoundaryError,
    cauchy_offcontour,
    cauchy_singular,
    plemelj_minus,
    plemelj_pair,
    plemelj_plus,
    s_matrix,
    singular_via_chart,
    weighted_norm,
)
from .solver import (
    JumpDataError,
    NoUniqueSolutionError,
    RHProblem,
    Solution,
    assemble_cw,
    diagnostics,
    evaluate_solution,
    factorize_jump,
    pose_on_reversed_orientation,
    region_probes,
    solve,
    solve_through_infinity,
)
from .verifier import (
    ConvergenceReport,
    DeformationSpec,
    check_deformation,
    check_det_and_uniqueness,
    check_involution,
    check_mobius_covariance,
    check_projection_algebra,
    check_rational_eigenfunctions,
    check_reproduction,
    pv_oracle,
)

__version__ = "0.1.0"
