"""Weighted H(div) finite elements and multigrid for Fourier modes of
axisymmetric problems on a meridian domain."""

from .mesh import (
    DOMAINS,
    MeshHierarchy,
    MeshLevel,
    Tag,
    VertexPatch,
    build_coarse,
    mesh_to_json,
    refine,
    vertex_patches,
)
from .quadrature import QuadratureRule, edge_rule, integrate, triangle_rule
from .spaces import (
    SpaceDofMap,
    curl_matrix,
    div_matrix,
    dof_map,
    evaluate,
    grad_matrix,
    interp_canonical_c,
    interp_tilde_c,
    interp_tilde_d,
    pi_S,
    weighted_clement,
    clement_nedelec,
)
from .assembly import (
    assemble_div,
    assemble_divdiv,
    assemble_lambda,
    assemble_load,
    assemble_mass_c,
    assemble_mass_d,
    grad_h,
    l2r_error,
    lambda_norm,
    write_coo,
)
from .multigrid import (
    Smoother,
    SolveReport,
    VCycle,
    build_prolongation,
    contraction_table,
    measure_delta,
    random_initial_guess,
    solve_mg,
)
from .mixed import error_table, error_table_csv, manufactured_solution, solve_mixed
from .verify import (
    CheckResult,
    check_commuting_interp,
    check_complex,
    check_helmholtz,
    check_transfer,
)

__version__ = "0.1.0"
