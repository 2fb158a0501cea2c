//! Encrypted matrix multiplication drivers.

pub mod blocking;
pub mod enhanced;
pub mod hegmm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{HeBackend, OpStats, PhaseCounts};
use crate::error::{Error, Result};
use crate::lintrans::{apply_plan, DiagonalPlan, PlanCache, PlanSource};
use crate::matrix::{FlattenOrder, Matrix};

pub use blocking::{block_schedule, blocked_mm, BlockPlan, BlockTask};
pub use enhanced::{
    hegmm_en, hegmm_en_with, partial_schedule, predict_hegmm_en, select_strategy, select_strategy_with, Duplication,
    IterationSchedule, StrategyDescriptor,
};
pub use hegmm::{hegmm, hegmm_with, predict_hegmm, predict_square_pad, square_pad_mm, square_pad_mm_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Hegmm,
    HegmmEn,
    SquarePad,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::SquarePad, Algorithm::Hegmm, Algorithm::HegmmEn];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hegmm => "hegmm",
            Algorithm::HegmmEn => "hegmm-en",
            Algorithm::SquarePad => "square-pad",
        }
    }

    /// Slots a run on an `m x l` by `l x n` product needs.
    pub fn required_slots(self, m: usize, l: usize, n: usize) -> usize {
        match self {
            Algorithm::Hegmm => hegmm::hegmm_slots(m, l, n),
            Algorithm::SquarePad => {
                let d = m.max(l).max(n);
                d * d
            }
            Algorithm::HegmmEn => enhanced::en_slots(m, l, n),
        }
    }

    pub fn fits(self, m: usize, l: usize, n: usize, slots: usize) -> bool {
        m > 0 && l > 0 && n > 0 && self.required_slots(m, l, n) <= slots
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hegmm" => Ok(Algorithm::Hegmm),
            "hegmm-en" | "en" => Ok(Algorithm::HegmmEn),
            "square-pad" | "square" => Ok(Algorithm::SquarePad),
            _ => Err(Error::Parse(format!("unknown algorithm {s:?} (expected hegmm, hegmm-en or square-pad)"))),
        }
    }
}

/// Where sigma/tau (and any initial shaping) run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocess {
    /// The client permutes its own cleartext before encrypting.
    #[default]
    Plaintext,
    /// The client encrypts raw operands and the cloud permutes them.
    Encrypted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Flatten order; `None` lets the algorithm choose.
    pub order: Option<FlattenOrder>,
    pub preprocess: Preprocess,
}

impl RunOptions {
    pub fn with_order(order: FlattenOrder) -> Self {
        Self { order: Some(order), ..Self::default() }
    }
}

pub fn multiply<B: HeBackend>(
    algo: Algorithm,
    a: &Matrix,
    b: &Matrix,
    opts: &RunOptions,
    backend: &B,
) -> Result<Matrix> {
    match algo {
        Algorithm::Hegmm => hegmm_with(a, b, opts, backend),
        Algorithm::HegmmEn => hegmm_en_with(a, b, opts, backend),
        Algorithm::SquarePad => square_pad_mm_with(a, b, opts, backend),
    }
}

/// Op counts a run will charge, without running it.
pub fn predict(algo: Algorithm, m: usize, l: usize, n: usize, opts: &RunOptions) -> Result<OpStats> {
    match algo {
        Algorithm::Hegmm => predict_hegmm(m, l, n, opts),
        Algorithm::HegmmEn => predict_hegmm_en(m, l, n, opts),
        Algorithm::SquarePad => predict_square_pad(m, l, n, opts),
    }
}

fn check_operands(a: &Matrix, b: &Matrix) -> Result<(usize, usize, usize)> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    check_dims(a.rows(), a.cols(), b.cols())?;
    Ok((a.rows(), a.cols(), b.cols()))
}

fn check_dims(m: usize, l: usize, n: usize) -> Result<()> {
    if m == 0 || l == 0 || n == 0 {
        return Err(Error::InvalidShape(format!("dimensions must be positive, got ({m},{l},{n})")));
    }
    Ok(())
}

fn check_capacity<B: HeBackend>(needed: usize, backend: &B) -> Result<()> {
    let available = backend.config().slot_count;
    if needed > available {
        return Err(Error::Capacity { needed, available });
    }
    Ok(())
}

fn cached_plan(source: PlanSource, width: usize) -> Result<std::sync::Arc<DiagonalPlan>> {
    PlanCache::global().get(&source, width)
}

/// Applies a plan, skipping identities.
fn run_plan<B: HeBackend>(ct: &B::Ciphertext, plan: &DiagonalPlan, backend: &B) -> Result<B::Ciphertext> {
    if plan.is_identity() {
        Ok(ct.clone())
    } else {
        apply_plan(ct, plan, backend)
    }
}

fn plan_counts(plan: &DiagonalPlan) -> PhaseCounts {
    if plan.is_identity() {
        return PhaseCounts::default();
    }
    let c = plan.cost();
    PhaseCounts { add: c.add, mult_cp: c.mult_cp, rot: c.rot, ..PhaseCounts::default() }
}

fn accumulate<B: HeBackend>(acc: Option<B::Ciphertext>, term: B::Ciphertext, backend: &B) -> Result<B::Ciphertext> {
    match acc {
        None => Ok(term),
        Some(a) => backend.add(&a, &term),
    }
}
