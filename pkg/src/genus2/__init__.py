"""Numerical two-tori sewing of genus-two Riemann surfaces and the
genus-two Zhu-recursion machinery for vertex operator algebras."""

from .elliptic import (
    ConvergenceError,
    DomainViolation,
    SeriesConfig,
    TorusModulus,
    dedekind_eta,
    eisenstein,
    lattice_reduce,
    min_lattice_distance,
    weierstrass_p,
)
from .sewing import (
    ModuliPoint,
    NonConvergence,
    SurfacePoint,
    annular_form,
    bidifferential_omega,
    build_A,
    neumann,
    one_form_nu,
    period_matrix,
    projective_connection,
    required_order,
    sewing_context,
    validate_moduli,
)
from .zhu import (
    ZhuWeight,
    f_coefficients,
    gen_weierstrass,
    p21_closed_form,
    p_column,
    q_row,
    r_row,
    shift_matrices,
    two_diff_basis,
    zhu_context,
)
from .heisenberg import ModulePair, h_npoint, nu_lambda, virasoro_one_point, z2_partition
from .calculus import (
    FDConfig,
    QuadratureConfig,
    ResidualReport,
    apply_Dx,
    contour_integral,
    fd_jacobian,
    moduli_derivative,
    serre_derivative,
    verify_identity,
    xi_matrix,
)
from .modular import (
    Sp4Element,
    check_nabla_invariance,
    sp4_inversion,
    sp4_swap,
    sp4_translation,
    transform_forms,
    transform_period,
)
from .fock import (
    FockOracle,
    apply_mode,
    genus1_npoint,
    genus1_one_point,
    genus2_brute,
    gram_block,
    verify_genus2_zhu,
)
from .suite import SuiteConfig, run_suite, standard_grid

__version__ = "0.1.0"
