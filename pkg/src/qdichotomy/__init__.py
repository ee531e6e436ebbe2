"""Quantum dichotomy transformations: Rényi divergences, strong converse
exponents and exact finite-blocklength optimization."""
from .channels import ChoiChannel, apply_choi
from .divergences import (
    DivergenceValue,
    d_max,
    fidelity,
    log_euclidean,
    petz,
    purified_distance,
    renyi_divergence,
    sandwiched,
    trace_distance,
    umegaki,
    von_neumann_entropy,
)
from .exceptions import (
    DimensionCapError,
    HypothesisViolationError,
    RejectedInputError,
    SingularOperatorError,
    SolverError,
)
from .exponents import (
    Dichotomy,
    ExponentResult,
    converse_lower_bound,
    f_flat_alpha_form,
    f_minimax_delta_form,
    first_order_rate,
    sc_exponent_purified,
    sc_exponent_trace_pure,
)
from .finite import (
    FiniteBlockResult,
    classical_reduce,
    eps_at_rate,
    max_transform_count,
    solve_optimal_fidelity,
    solve_optimal_trace,
)
from .linalg import DensityOperator, HermitianOperator, partial_trace, pinching_map, tensor_power
from .verify import SuiteReport, run_suite

__version__ = "0.1.0"

__all__ = [
    "ChoiChannel", "apply_choi",
    "DivergenceValue", "d_max", "fidelity", "log_euclidean", "petz", "purified_distance",
    "renyi_divergence", "sandwiched", "trace_distance", "umegaki", "von_neumann_entropy",
    "DimensionCapError", "HypothesisViolationError", "RejectedInputError", "SingularOperatorError",
    "SolverError",
    "Dichotomy", "ExponentResult", "converse_lower_bound", "f_flat_alpha_form",
    "f_minimax_delta_form", "first_order_rate", "sc_exponent_purified", "sc_exponent_trace_pure",
    "FiniteBlockResult", "classical_reduce", "eps_at_rate", "max_transform_count",
    "solve_optimal_fidelity", "solve_optimal_trace",
    "DensityOperator", "HermitianOperator", "partial_trace", "pinching_map", "tensor_power",
    "SuiteReport", "run_suite",
]
