"""ADMM training of deep sigmoid nets with closed-form block updates."""

from .core import (
    IterationDiagnostics,
    NumericError,
    Trace,
    admm_step,
    diagnose,
    init_state,
    iterate,
    lla_coefficients,
    trace_columns,
    train,
    update_multipliers,
    update_VN,
    update_VN1,
    update_Vj,
    update_Wi,
    update_WN,
)
from .objective import (
    Gradient,
    augmented_lagrangian,
    grad_augmented_lagrangian,
    kkt_groups,
    kkt_residual,
    lyapunov,
)
from .state import MODES, ADMMState, HyperParams, LLACoefficients
from .theory import (
    TheoryConstants,
    ValidationReport,
    check_runtime_invariants,
    theory_constants,
    theory_params,
    validate_params,
)

__all__ = [
    "IterationDiagnostics",
    "NumericError",
    "Trace",
    "admm_step",
    "diagnose",
    "init_state",
    "iterate",
    "lla_coefficients",
    "trace_columns",
    "train",
    "update_multipliers",
    "update_VN",
    "update_VN1",
    "update_Vj",
    "update_Wi",
    "update_WN",
    "Gradient",
    "augmented_lagrangian",
    "grad_augmented_lagrangian",
    "kkt_groups",
    "kkt_residual",
    "lyapunov",
    "MODES",
    "ADMMState",
    "HyperParams",
    "LLACoefficients",
    "TheoryConstants",
    "ValidationReport",
    "check_runtime_invariants",
    "theory_constants",
    "theory_params",
    "validate_params",
]
