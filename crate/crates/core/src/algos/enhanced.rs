//! The enhanced algorithm: duplicate the thin operand so that each
//! ciphertext multiplication yields several partial products at once.
//!
//! With `p = min(m, l, n)` and `t = ceil(l / p)`, either `A` is stacked `t`
//! times vertically (`p == m`) or `B` is repeated `t` times horizontally
//! (`p == n`). Block `h` of the product of iteration `k` then holds partial
//! product `(k + h p) mod l`, so `p` iterations cover all `l` partials.
//!
//! Both operands live on a shared `R x C` canvas with `R = max(M, l)` and
//! `C = max(N', l)`, where `M x N'` is the stacked shape. The client
//! replicates the permuted operands across the canvas so that each cloud
//! shift is a two-diagonal layout shift rather than a full modular shift.

use serde::{Deserialize, Serialize};

use crate::backend::{HeBackend, OpStats, Phase, PhaseCounts};
use crate::error::Result;
use crate::lintrans::{extract_diagonals, DiagonalPlan, LayoutShift, PermutationMatrix, PlanSource, ShiftAxis};
use crate::matrix::{duplicate_horizontal, duplicate_vertical, eps, omega, sigma, tau, FlattenOrder, Matrix};

use super::{
    accumulate, cached_plan, check_capacity, check_dims, check_operands, plan_counts, run_plan, Preprocess, RunOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Duplication {
    None,
    AVertical,
    BHorizontal,
}

/// Partial-product indices produced by one iteration, one per block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub k: usize,
    pub partials: Vec<usize>,
    /// `redundant[h]` marks block `h` as a copy of an index already taken.
    pub redundant: Vec<bool>,
}

impl IterationSchedule {
    pub fn has_redundant(&self) -> bool {
        self.redundant.iter().any(|&r| r)
    }

    /// Indices this iteration contributes.
    pub fn fresh(&self) -> impl Iterator<Item = usize> + '_ {
        self.partials.iter().zip(&self.redundant).filter(|(_, &r)| !r).map(|(&j, _)| j)
    }
}

/// For each `k < p` and block `h < t`, the partial index `(k + h p) mod l`.
/// Scanning `k` then `h` in ascending order, the first occurrence is kept.
pub fn partial_schedule(l: usize, p: usize, t: usize) -> Vec<IterationSchedule> {
    let mut seen = vec![false; l];
    (0..p)
        .map(|k| {
            let partials: Vec<usize> = (0..t).map(|h| (k + h * p) % l).collect();
            let redundant = partials.iter().map(|&j| std::mem::replace(&mut seen[j], true)).collect();
            IterationSchedule { k, partials, redundant }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyDescriptor {
    pub m: usize,
    pub l: usize,
    pub n: usize,
    pub p: usize,
    pub t: usize,
    pub duplicated: Duplication,
    pub order: FlattenOrder,
    /// Shape after duplication, `M x N'`.
    pub working: (usize, usize),
    /// Shared canvas both operands are laid out on.
    pub canvas: (usize, usize),
    /// Segment length, `R * C`.
    pub slots: usize,
    /// Slot distance between consecutive blocks.
    pub fold_stride: usize,
    pub schedule: Vec<IterationSchedule>,
    pub predicted: OpStats,
}

impl StrategyDescriptor {
    pub fn redundant_count(&self) -> usize {
        self.schedule.iter().map(|s| s.redundant.iter().filter(|&&r| r).count()).sum()
    }

    fn x_shift(&self, k: usize) -> PlanSource {
        PlanSource::Shift(LayoutShift {
            axis: ShiftAxis::Cols,
            k,
            period: self.l,
            shape: self.canvas,
            order: self.order,
        })
    }

    fn y_shift(&self, k: usize) -> PlanSource {
        PlanSource::Shift(LayoutShift {
            axis: ShiftAxis::Rows,
            k,
            period: self.l,
            shape: self.canvas,
            order: self.order,
        })
    }

    fn mask(&self, it: &IterationSchedule) -> Vec<i64> {
        let (rows, cols) = self.canvas;
        let (m, n) = (self.m, self.n);
        let mut mask = vec![1; self.slots];
        for (h, _) in it.redundant.iter().enumerate().filter(|(_, &r)| r) {
            for r in 0..rows {
                for c in 0..cols {
                    let inside = match self.duplicated {
                        Duplication::AVertical => (h * m..(h + 1) * m).contains(&r),
                        Duplication::BHorizontal => (h * n..(h + 1) * n).contains(&c),
                        Duplication::None => false,
                    };
                    if inside {
                        mask[self.order.index(r, c, rows, cols)] = 0;
                    }
                }
            }
        }
        mask
    }

    /// Cloud-side maps from raw operands to the replicated canvas.
    fn canvas_plans(&self) -> Result<(DiagonalPlan, DiagonalPlan)> {
        let (m, l, n) = (self.m, self.l, self.n);
        let (wm, wn) = self.working;
        let a_map = PermutationMatrix::from_cell_map((m, l), self.canvas, self.order, |i, c| {
            (i < wm).then_some((i % m, (i + c) % l))
        })?;
        let b_map = PermutationMatrix::from_cell_map((l, n), self.canvas, self.order, |r, j| {
            (j < wn).then_some(((r + j) % l, j % n))
        })?;
        Ok((extract_diagonals(&a_map).padded(self.slots)?, extract_diagonals(&b_map).padded(self.slots)?))
    }
}

pub fn select_strategy(m: usize, l: usize, n: usize) -> Result<StrategyDescriptor> {
    select_strategy_with(m, l, n, &RunOptions::default())
}

pub fn select_strategy_with(m: usize, l: usize, n: usize, opts: &RunOptions) -> Result<StrategyDescriptor> {
    check_dims(m, l, n)?;
    let p = m.min(l).min(n);
    let t = l.div_ceil(p);
    let (duplicated, default_order, working) = if p == l {
        (Duplication::None, FlattenOrder::ColumnMajor, (m, n))
    } else if p == m {
        (Duplication::AVertical, FlattenOrder::ColumnMajor, (t * m, n))
    } else {
        (Duplication::BHorizontal, FlattenOrder::RowMajor, (m, t * n))
    };
    let order = opts.order.unwrap_or(default_order);
    let canvas = (working.0.max(l), working.1.max(l));
    let origin = match duplicated {
        Duplication::AVertical => (m, 0),
        Duplication::BHorizontal => (0, n),
        Duplication::None => (0, 0),
    };
    let mut s = StrategyDescriptor {
        m,
        l,
        n,
        p,
        t,
        duplicated,
        order,
        working,
        canvas,
        slots: canvas.0 * canvas.1,
        fold_stride: order.index(origin.0, origin.1, canvas.0, canvas.1),
        schedule: partial_schedule(l, p, t),
        predicted: OpStats::default(),
    };
    s.predicted = predict_for(&s, opts.preprocess)?;
    Ok(s)
}

/// Canvas size the enhanced algorithm needs for an `(m, l, n)` product.
pub fn en_slots(m: usize, l: usize, n: usize) -> usize {
    let p = m.min(l).min(n);
    if p == 0 {
        return 0;
    }
    let t = l.div_ceil(p);
    let (wm, wn) = if p == l {
        (m, n)
    } else if p == m {
        (t * m, n)
    } else {
        (m, t * n)
    };
    wm.max(l) * wn.max(l)
}

fn predict_for(s: &StrategyDescriptor, preprocess: Preprocess) -> Result<OpStats> {
    let client = PhaseCounts { encrypt: 2, decrypt: 1, ..PhaseCounts::default() };
    let mut cloud = PhaseCounts::default();
    if preprocess == Preprocess::Encrypted {
        let (pa, pb) = s.canvas_plans()?;
        cloud = cloud + plan_counts(&pa) + plan_counts(&pb);
    }
    for it in &s.schedule {
        cloud = cloud
            + plan_counts(&*cached_plan(s.x_shift(it.k), s.slots)?)
            + plan_counts(&*cached_plan(s.y_shift(it.k), s.slots)?);
        cloud.mult_cc += 1;
        cloud.mult_cp += u64::from(it.has_redundant());
    }
    cloud.add += (s.p - 1 + s.t - 1) as u64;
    cloud.rot += (s.t - 1) as u64;
    Ok(OpStats { client, cloud })
}

pub fn predict_hegmm_en(m: usize, l: usize, n: usize, opts: &RunOptions) -> Result<OpStats> {
    Ok(select_strategy_with(m, l, n, opts)?.predicted)
}

/// The client's cleartext canvases: permuted, duplicated and replicated.
pub fn client_canvases(a: &Matrix, b: &Matrix, s: &StrategyDescriptor) -> Result<(Matrix, Matrix)> {
    let (rows, cols) = s.canvas;
    let (wm, wn) = s.working;
    let a_dup = match s.duplicated {
        Duplication::AVertical => duplicate_vertical(a, s.t)?,
        _ => a.clone(),
    };
    let b_dup = match s.duplicated {
        Duplication::BHorizontal => duplicate_horizontal(b, s.t)?,
        _ => b.clone(),
    };
    let x = eps(&sigma(&a_dup), 0, wm, cols)?.pad_to(rows, cols)?;
    let y = omega(&tau(&b_dup), 0, rows, wn)?.pad_to(rows, cols)?;
    Ok((x, y))
}

pub fn hegmm_en<B: HeBackend>(a: &Matrix, b: &Matrix, backend: &B) -> Result<Matrix> {
    hegmm_en_with(a, b, &RunOptions::default(), backend)
}

pub fn hegmm_en_with<B: HeBackend>(a: &Matrix, b: &Matrix, opts: &RunOptions, backend: &B) -> Result<Matrix> {
    let (m, l, n) = check_operands(a, b)?;
    let s = select_strategy_with(m, l, n, opts)?;
    check_capacity(s.slots, backend)?;
    let (rows, cols) = s.canvas;

    backend.set_phase(Phase::Client);
    let (ct_x, ct_y) = match opts.preprocess {
        Preprocess::Plaintext => {
            let (x, y) = client_canvases(a, b, &s)?;
            let ct_x = backend.encrypt_slots(x.flatten(s.order).values(), s.slots)?;
            let ct_y = backend.encrypt_slots(y.flatten(s.order).values(), s.slots)?;
            (ct_x, ct_y)
        }
        Preprocess::Encrypted => {
            let raw_a = backend.encrypt_slots(a.flatten(s.order).values(), s.slots)?;
            let raw_b = backend.encrypt_slots(b.flatten(s.order).values(), s.slots)?;
            backend.set_phase(Phase::Cloud);
            let (pa, pb) = s.canvas_plans()?;
            (run_plan(&raw_a, &pa, backend)?, run_plan(&raw_b, &pb, backend)?)
        }
    };

    backend.set_phase(Phase::Cloud);
    let mut acc = None;
    for it in &s.schedule {
        let x = run_plan(&ct_x, &*cached_plan(s.x_shift(it.k), s.slots)?, backend)?;
        let y = run_plan(&ct_y, &*cached_plan(s.y_shift(it.k), s.slots)?, backend)?;
        let mut product = backend.mult(&x, &y)?;
        if it.has_redundant() {
            product = backend.cmult(&product, &s.mask(it))?;
        }
        acc = Some(accumulate(acc, product, backend)?);
    }
    let acc = acc.expect("p >= 1");
    let mut folded = acc.clone();
    for h in 1..s.t {
        let shifted = backend.rot(&acc, (h * s.fold_stride) as i64)?;
        folded = backend.add(&folded, &shifted)?;
    }

    backend.set_phase(Phase::Client);
    let slots = backend.decrypt(&folded)?;
    Matrix::from_slots(&slots, s.order, rows, cols, m, n)
}
