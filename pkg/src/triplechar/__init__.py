"""Numerical laboratory for third-order hyperbolic operators with a triple
characteristic at t = 0: characteristic-root diagnostics, fundamental-matrix
classification, per-frequency mode simulation, weighted energy-estimate
verification, well-posedness probes, and the anisotropic scaling calculus.
"""

__version__ = "0.1.0"

from .coeffs import (
    CoefficientSpec,
    CoeffTerm,
    ForcingSpec,
    ForcingTerm,
    SampledForcing,
    XTerm,
    ZERO_FORCING,
    quadratic_form,
    xi_component,
    xi_monomial,
    xi_norm_sq,
)
from .operators import (
    FullSymbol,
    ModelOperator,
    PolySymbol,
    laplacian_operator,
    monomial_symbol,
    poly_from_spec,
    random_model_operator,
)
from .symbols import (
    CubicAnalysis,
    WeightFunction,
    delta_symbols,
    discriminant,
    lemma2_scan,
    principal_symbol,
    solve_cubic_trig,
    weight_alpha_scan,
    weight_f,
    weight_inequality_alpha,
    weight_power,
)
from .geometry import (
    EFFECTIVELY_HYPERBOLIC,
    NOT_EFFECTIVELY_HYPERBOLIC,
    FundamentalMatrix,
    PhasePoint,
    SpectrumReport,
    check_necessary_conditions,
    classify_spectrum,
    critical_points_on_t0,
    fundamental_matrix,
    subprincipal_symbol,
)
from .modes import (
    LOWER_END,
    UPPER_END,
    ModeProblem,
    ModeTrajectory,
    assemble_rhs,
    integrate_mode,
    sweep,
)
from .energy import (
    BACKWARD,
    FORWARD,
    EnergyLedger,
    EstimateReport,
    SobolevNormSpec,
    XiGrid,
    assemble_estimate,
    build_energy_ledger,
    build_xi_grid,
    energy_tilde,
    fit_constants,
    verify_master_identity,
    verify_scalar_weight_inequality,
)
from .wellposed import (
    GrowthReport,
    SecondOrderExample,
    growth_fit,
    oleinik_loss_count,
    probe_model_operator,
    probe_second_order,
    simulate_second_order,
)
from .scaling import (
    OrderFunction,
    RescaledOperator,
    ScalingTransform,
    metric_eval,
    order_function_eval,
    rescale_operator,
    resolve_coupling,
)
from .scenario import Scenario
from .symbols import hyperbolicity_window

__all__ = [name for name in dir() if not name.startswith("_")]
