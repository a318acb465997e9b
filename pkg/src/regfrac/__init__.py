"""Ground states of Schrodinger equations with regional fractional diffusion.

The library discretizes the singular-kernel quadratic form of the regional
operator on uniform box grids, minimizes the Nehari quotient to compute
ground states, and drives the studies that check the constant-coefficient
level law and the small-eps concentration of solutions.
"""
from .fields import (
    Field,
    Grid,
    l2_norm,
    localization_profile,
    lp_norm_weighted,
    make_grid,
    mass_center,
    mass_in_ball,
    read_field,
    sample_profile,
    write_field,
    zero_field,
)
from .forms import (
    CoeffProfile,
    CoeffSpec,
    NormEquivalenceReport,
    QuadForm,
    ScopeSpec,
    apply_form,
    assemble_full_form,
    assemble_regional_form,
    check_norm_equivalence,
    cover_radius,
    dump_form,
    eval_scope,
    norm_equivalence_factor,
    quad_energy,
    sphere_area,
)
from .energies import (
    ConstCoeffProblem,
    EnergyReport,
    GapReport,
    ProblemSpec,
    assemble_for,
    check_concentration_gap,
    energy,
    frozen_level,
    gradient,
    level_exponents,
    level_from_field,
    nehari_scale,
    nonlinear_integral,
    norm_squared,
    quotient,
)
from .solver import (
    GroundState,
    ReferenceLevel,
    SolverOptions,
    SweepRecord,
    reference_level,
    solve_ground_state,
    sweep_epsilon,
)
from .experiments import (
    AuditReport,
    ConcentrationReport,
    ScalingReport,
    ScanReport,
    concentration_sweep,
    norm_equivalence_audit,
    scan_frozen_levels,
    verify_scaling_law,
)
from .config import (
    RunConfig,
    echo_to_text,
    parse_config,
    parse_config_string,
)

__all__ = [name for name in dir() if not name.startswith("_")]
