//! Tiling products too large for one ciphertext.
//!
//! Block products are computed encrypted, decrypted by the client and summed
//! in cleartext.

use serde::{Deserialize, Serialize};

use crate::backend::HeBackend;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{check_operands, multiply, Algorithm, RunOptions};

/// Block sizes along the rows of `A`, the shared inner dimension, and the
/// columns of `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub row_cuts: Vec<usize>,
    pub inner_cuts: Vec<usize>,
    pub col_cuts: Vec<usize>,
}

/// One block product `A[i][k] x B[k][j]` and the algorithm chosen for it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTask {
    pub row_block: usize,
    pub inner_block: usize,
    pub col_block: usize,
    pub origin: (usize, usize, usize),
    pub dims: (usize, usize, usize),
    pub algorithm: Algorithm,
}

fn halves(d: usize) -> Vec<usize> {
    if d < 2 {
        vec![d]
    } else {
        vec![d.div_ceil(2), d / 2]
    }
}

fn chunks(d: usize, size: usize) -> Vec<usize> {
    let mut out = vec![size; d / size];
    if !d.is_multiple_of(size) {
        out.push(d % size);
    }
    out
}

impl BlockPlan {
    pub fn custom(row_cuts: Vec<usize>, inner_cuts: Vec<usize>, col_cuts: Vec<usize>) -> Result<Self> {
        for (name, cuts) in [("row", &row_cuts), ("inner", &inner_cuts), ("column", &col_cuts)] {
            if cuts.is_empty() || cuts.contains(&0) {
                return Err(Error::InvalidShape(format!("{name} cuts must be non-empty and positive")));
            }
        }
        Ok(Self { row_cuts, inner_cuts, col_cuts })
    }

    /// One block: the whole product.
    pub fn single(m: usize, l: usize, n: usize) -> Self {
        Self { row_cuts: vec![m], inner_cuts: vec![l], col_cuts: vec![n] }
    }

    /// Every dimension split into two near-equal halves.
    pub fn p1(m: usize, l: usize, n: usize) -> Self {
        Self { row_cuts: halves(m), inner_cuts: halves(l), col_cuts: halves(n) }
    }

    /// Every dimension split into 64-wide tiles plus a remainder.
    pub fn p2(m: usize, l: usize, n: usize) -> Self {
        Self::tiled(m, l, n, 64)
    }

    pub fn tiled(m: usize, l: usize, n: usize, tile: usize) -> Self {
        let tile = tile.max(1);
        Self { row_cuts: chunks(m, tile), inner_cuts: chunks(l, tile), col_cuts: chunks(n, tile) }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.row_cuts.iter().sum(), self.inner_cuts.iter().sum(), self.col_cuts.iter().sum())
    }

    pub fn validate(&self, m: usize, l: usize, n: usize) -> Result<()> {
        if self.dims() != (m, l, n) {
            return Err(Error::DimensionMismatch(format!(
                "block plan tiles {:?}, operands are ({m},{l},{n})",
                self.dims()
            )));
        }
        Ok(())
    }
}

fn offsets(cuts: &[usize]) -> Vec<usize> {
    cuts.iter()
        .scan(0, |acc, &c| {
            let start = *acc;
            *acc += c;
            Some(start)
        })
        .collect()
}

/// Assigns an algorithm to every block product: `preferred` when it fits,
/// otherwise the basic algorithm.
pub fn block_schedule(plan: &BlockPlan, preferred: Algorithm, slots: usize) -> Result<Vec<BlockTask>> {
    let (ro, ko, co) = (offsets(&plan.row_cuts), offsets(&plan.inner_cuts), offsets(&plan.col_cuts));
    let mut tasks = Vec::new();
    for (i, &bm) in plan.row_cuts.iter().enumerate() {
        for (j, &bn) in plan.col_cuts.iter().enumerate() {
            for (k, &bl) in plan.inner_cuts.iter().enumerate() {
                let algorithm = if preferred.fits(bm, bl, bn, slots) {
                    preferred
                } else if Algorithm::Hegmm.fits(bm, bl, bn, slots) {
                    Algorithm::Hegmm
                } else {
                    return Err(Error::Capacity {
                        needed: preferred.required_slots(bm, bl, bn).min(Algorithm::Hegmm.required_slots(bm, bl, bn)),
                        available: slots,
                    });
                };
                tasks.push(BlockTask {
                    row_block: i,
                    inner_block: k,
                    col_block: j,
                    origin: (ro[i], ko[k], co[j]),
                    dims: (bm, bl, bn),
                    algorithm,
                });
            }
        }
    }
    Ok(tasks)
}

pub fn blocked_mm<B: HeBackend>(
    a: &Matrix,
    b: &Matrix,
    plan: &BlockPlan,
    algo: Algorithm,
    opts: &RunOptions,
    backend: &B,
) -> Result<Matrix> {
    let (m, l, n) = check_operands(a, b)?;
    plan.validate(m, l, n)?;
    let cfg = backend.config();
    let arith = cfg.arithmetic()?;
    let tasks = block_schedule(plan, algo, cfg.slot_count)?;
    let mut out = Matrix::zeros(m, n);
    let mut acc: Option<Matrix> = None;
    for task in &tasks {
        let (r0, k0, c0) = task.origin;
        let (bm, bl, bn) = task.dims;
        let product = multiply(task.algorithm, &a.block(r0, k0, bm, bl)?, &b.block(k0, c0, bl, bn)?, opts, backend)?;
        acc = Some(match acc {
            None => product,
            Some(s) => s.add_checked(&product, arith)?,
        });
        if task.inner_block + 1 == plan.inner_cuts.len() {
            out.set_block(r0, c0, &acc.take().expect("at least one inner block"))?;
        }
    }
    Ok(out)
}
