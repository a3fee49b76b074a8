"""torusphase: a numerical laboratory for the Lagrangian-phase flow of a
Hermitian pencil on flat complex 2-tori, with an independent Newton oracle,
functional monitors, and the exact intersection arithmetic of the blowup
deformation family."""

from .blowup import (
    BlowupLattice,
    ClassVector,
    blowup_table,
    cot_theta_from_classes,
    g_function,
    pairing,
    perturbed_cot,
    perturbed_cot_slope,
    ray_check,
    solve_t_of_s,
    theta_hat_from_classes,
)
from .fields import (
    GridSpec,
    HermitianField,
    ScalarField,
    complex_hessian,
    gradient_z,
    integrate,
    load_field,
    random_bandlimited,
    save_field,
    solve_constant_laplacian,
)
from .flow import (
    FlowConfig,
    FlowState,
    FlowTrace,
    HypercriticalityLost,
    StagnationError,
    newton_dhym,
    rhs,
    run,
    step,
)
from .functionals import (
    BackgroundData,
    FunctionalReport,
    StateCache,
    cy_complex,
    dhym_residual,
    dissipation,
    evaluate_state,
    functional_report,
    i_functional,
    j_functional,
    ma_residual,
    make_background,
    phase_drift_identity,
    volume_functional,
)
from .hermitian import (
    BranchCutError,
    HermitianPair,
    PhasePoint,
    eta_metric,
    hypercritical,
    lagrangian_phase,
    pencil_eigenvalues,
    phase_from_arg,
    phase_point,
    subsolution_gap,
    subsolution_gap_limit,
    zeta_v,
)
from .kernels import backend as kernel_backend

__version__ = "0.1.0"
