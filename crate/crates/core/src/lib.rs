//! Locally sparse quantile estimation for partially functional interaction
//! models.
//!
//! The response is modelled as
//! `y = ∫ X(t) β_0(t) dt + Σ_k z_k ∫ X(t) β_k(t) dt + zᵀγ + ε` with the
//! coefficient functions expanded in clamped B-splines. A per-interval
//! sparse-group MCP penalty makes each `β_k` exactly zero on subregions of the
//! domain while keeping every interaction inside the support of the main
//! effect. Estimation minimizes the check loss at level `τ` by
//! majorize-minimization with a local quadratic approximation of the penalty.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod basis;
pub mod design;
pub mod error;
pub mod penalty;
pub mod quadrature;
mod scalar;
pub mod simbench;
pub mod solver;
pub mod tuning;

pub use basis::{
    build_basis, cross_gram, eval_basis, full_gram, functional_inner_products, inner_product_operator,
    local_gram, roughness_matrix, BasisSpec, Derivative, LocalGram, PenaltyMatrices,
};
pub use design::{
    build_design, center_columns, CenteringOffsets, Curves, Dataset, DesignLayout, DesignMatrices,
};
pub use error::{Error, Result};
pub use penalty::{
    lqa_weights, lqa_weights_for, mcp, mcp_deriv, penalty_value, penalty_value_for, LqaWeights,
    PenaltyConfig, PenaltyKind,
};
pub use quadrature::QuadratureRule;
pub use scalar::Real;
pub use solver::{
    check_loss, fit, majorizer, newton_step, predict, reconstruct, Coefficients, FitOptions, FitResult,
    Loss, Method, ThresholdMode,
};
pub use tuning::{grid_search, validation_score, TuningGrid, TuningResult};

pub type BasisSpec64 = BasisSpec<f64>;
pub type PenaltyMatrices64 = PenaltyMatrices<f64>;
pub type PenaltyConfig64 = PenaltyConfig<f64>;
pub type Dataset64 = Dataset<f64>;
pub type DesignMatrices64 = DesignMatrices<f64>;
pub type FitOptions64 = FitOptions<f64>;
pub type FitResult64 = FitResult<f64>;
pub type Coefficients64 = Coefficients<f64>;
pub type TuningResult64 = TuningResult<f64>;

pub type BasisSpec32 = BasisSpec<f32>;
pub type FitResult32 = FitResult<f32>;
