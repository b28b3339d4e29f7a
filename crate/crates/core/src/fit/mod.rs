//! Curve fitting, collapse-point extraction and the cross-scale law.

mod collapse;
mod curve_fit;
pub mod curves;
pub mod optimizer;
pub mod registry;
mod scaling;

use alloc::string::String;

pub use collapse::{collapse_point, collapse_point_of, golden_section_max, CollapsePoint, LocalMax, GRID_POINTS};
pub use curve_fit::{
    fit_curve, normalize_percent, r_squared, rank_outcomes, select_best_form, sse_objective, FitOptions, FitResult, FormOutcome,
};
pub use curves::{CurveForm, CurveModel};
pub use optimizer::{minimize, Bounds, LbfgsbConfig, Minimum, Termination};
pub use registry::{ModelRegistry, RegistryRow, TrainingHyperparameters};
pub use scaling::{extrapolate_frequency, fit_scaling_law, ComputeBudget, ScalingFit, ScalingOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("frequency {0} is below 1")]
    InvalidFrequency(f64),
    #[error("data contain non-finite values")]
    NonFiniteData,
    #[error("data have zero variance")]
    ZeroVariance,
    #[error("every start of {0} diverged")]
    AllStartsDiverged(CurveForm),
    #[error("fit did not converge")]
    NotConverged,
    #[error("need at least 3 distinct compute budgets, got {0}")]
    TooFewBudgets(usize),
    #[error("registry row {label}: D = {d} but 20 * N = {expected}")]
    RegistryMismatch { label: String, d: u64, expected: u128 },
}
