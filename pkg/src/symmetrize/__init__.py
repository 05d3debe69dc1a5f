"""Grid-based polarization and Schwarz-rearrangement toolkit for constrained
quasi-linear minimization."""

from .grid import (
    BALL,
    BOX,
    Domain,
    GridFunction,
    VectorField,
    boundary_tail_mass,
    from_profile,
    gradient,
    gradient_pnorm_pow,
    grid_function,
    integrate,
    lp_distance,
    lp_norm,
    make_domain,
    read_csv,
    superlevel_measure,
    w1p_norm,
    write_csv,
)
from .rearrange import (
    GENERAL,
    LATTICE_EXACT,
    HalfSpace,
    PolarizationTrace,
    PolarizerSequence,
    critical_set_measure,
    iterated_polarization,
    polarize,
    polarizer_sequence,
    schwarz_rearrange,
)
from .functional import (
    ConstraintModel,
    CutoffSpec,
    DegenerateTestFunction,
    FluxOperator,
    IntegrandModel,
    NonlinearityModel,
    constraint_pairing,
    cutoff_test_function,
    directional_derivative,
    el_residual,
    f_term,
    g_constraint,
    growth_validate,
    j_energy,
    monotone_operator_check,
    multiplier_estimate,
    smooth_bump,
    total_energy,
)
from .solver import (
    EnergyDiverged,
    MinimizeResult,
    SolverOptions,
    ZeroConstraintMass,
    default_init,
    minimize,
    multi_start_minimize,
    project_to_constraint,
)
from .verify import (
    VERDICT_FAILED,
    VERDICT_INCONCLUSIVE,
    VERDICT_SYMMETRIC,
    CounterexampleFixture,
    ExperimentOptions,
    SymmetryReport,
    best_translation,
    identity_case_check,
    make_counterexample_fixture,
    polarization_identity_check,
    polya_szego_check,
    run_symmetry_experiment,
    symmetry_defect,
    tol_grad,
)

__version__ = "0.1.0"
