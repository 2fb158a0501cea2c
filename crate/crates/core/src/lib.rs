//! Homomorphic general matrix multiplication over packed SIMD ciphertexts.
//!
//! The product `A x B` of an `m x l` and an `l x n` matrix is rewritten as a
//! sum of element-wise products of permuted operands, and every permutation
//! is evaluated on ciphertexts as rotate-mask-accumulate. A deterministic
//! emulator stands in for the encryption scheme and counts every primitive.

pub mod algos;
pub mod backend;
pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod lintrans;
pub mod matrix;

pub use algos::{
    blocked_mm, hegmm, hegmm_en, multiply, select_strategy, square_pad_mm, Algorithm, BlockPlan, Preprocess,
    RunOptions, StrategyDescriptor,
};
pub use backend::{BackendConfig, HeBackend, OpStats, Phase, PhaseCounts, SimdEmulator, DEFAULT_SLOTS};
pub use bench::{classify_shape, estimate_cost, run_campaign, CampaignConfig, CostModel, ShapeCategory};
pub use error::{Error, Result};
pub use lintrans::{
    apply_plan, build_permutation, count_nonzero_diagonals, diagonal_bounds, extract_diagonals, DiagonalBounds,
    DiagonalPlan, PermutationMatrix, PlanCache, Transform, TransformKind,
};
pub use matrix::{Arithmetic, FlatVector, FlattenOrder, Matrix};
