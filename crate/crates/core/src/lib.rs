//! Weighted sup-convolution aggregate utilities, their saddle conjugates,
//! and the conditional-expectation fields they induce on finite scenario
//! trees, together with a verification harness that checks every derivative
//! formula, matrix identity, and uniform curvature bound against
//! independent oracles.

// indexed loops everywhere: this is matrix code
#![allow(clippy::needless_range_loop)]

pub mod aggregate;
pub mod config;
pub mod error;
pub mod field;
pub mod linalg;
pub mod saddle;
pub mod utility;
pub mod verify;

pub use aggregate::{
    brute_force_r, r_and_gradient, r_hessian, solve_allocation, AggregateDerivatives,
    AggregateGradient, AllocationResult, WeightVector,
};
pub use config::ProblemConfig;
pub use error::{Error, Result};
pub use field::{
    curvature_matrix_direct, field_at, invert_field, pareto_allocation_field, spectral_bound_check,
    terminal_field, tolerance_matrix, tolerance_representation, FieldEvaluation,
    NodeFieldEvaluator, NodeRef, ScenarioTree, SpectralCheck, ToleranceRepresentation, TreeSpec,
};
pub use linalg::Matrix;
pub use saddle::{
    bundle_from_evaluation, conjugate_point_from_dual, conjugate_point_from_primal, envelope_check,
    exponential_conjugate_value, second_order_bundle, AggregateEvaluator, DualPoint, Evaluation,
    PrimalEvaluator, PrimalPoint, SaddlePair, SecondOrderBundle,
};
pub use utility::{AgentSet, UtilityKind, UtilitySpec};
pub use verify::{
    exponential_aggregate_oracle, finite_difference_gradient, minimax_grid, run_suite, CheckReport,
    ExponentialOracle, Suite, SweepConfig, Tolerances,
};
