//! Slot-permutation matrices, their generalized-diagonal decomposition, and
//! homomorphic evaluation by rotate-mask-accumulate.
//!
//! A linear map `U` on a packed vector is evaluated as
//! `U.v = sum_z u_z (.) Rot(v, z)` where `u_z[i] = U[i][i + z]` and `z`
//! ranges over the offsets of the non-zero diagonals. Every diagonal costs
//! one rotation (skipped for `z = 0`), one plaintext multiply, and all but
//! the first cost one addition.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::backend::HeBackend;
use crate::error::{Error, Result};
use crate::matrix::FlattenOrder;

/// One of the four matrix transforms, with the dimensions it acts on.
///
/// `Sigma` and `Tau` keep the shape; `Eps` maps `m x l -> m x n` and
/// `Omega` maps `l x n -> m x n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "lowercase")]
pub enum TransformKind {
    Sigma { m: usize, l: usize },
    Tau { l: usize, n: usize },
    Eps { k: usize, m: usize, l: usize, n: usize },
    Omega { k: usize, l: usize, m: usize, n: usize },
}

impl TransformKind {
    pub fn validate(&self) -> Result<()> {
        let (dims_ok, k_ok) = match *self {
            TransformKind::Sigma { m, l } => (m > 0 && l > 0, true),
            TransformKind::Tau { l, n } => (l > 0 && n > 0, true),
            TransformKind::Eps { k, m, l, n } | TransformKind::Omega { k, l, m, n } => (m > 0 && l > 0 && n > 0, k < l),
        };
        if !dims_ok {
            return Err(Error::InvalidShape(format!("{self:?}: dimensions must be positive")));
        }
        if !k_ok {
            return Err(Error::InvalidShape(format!("{self:?}: shift must lie in [0, l)")));
        }
        Ok(())
    }

    pub fn input_shape(&self) -> (usize, usize) {
        match *self {
            TransformKind::Sigma { m, l } => (m, l),
            TransformKind::Tau { l, n } => (l, n),
            TransformKind::Eps { m, l, .. } => (m, l),
            TransformKind::Omega { l, n, .. } => (l, n),
        }
    }

    pub fn output_shape(&self) -> (usize, usize) {
        match *self {
            TransformKind::Sigma { m, l } => (m, l),
            TransformKind::Tau { l, n } => (l, n),
            TransformKind::Eps { m, n, .. } | TransformKind::Omega { m, n, .. } => (m, n),
        }
    }

    /// The input cell read by output cell `(i, j)`.
    pub fn source_cell(&self, i: usize, j: usize) -> (usize, usize) {
        match *self {
            TransformKind::Sigma { l, .. } => (i, (i + j) % l),
            TransformKind::Tau { l, .. } => ((i + j) % l, j),
            TransformKind::Eps { k, l, .. } => (i, (j + k) % l),
            TransformKind::Omega { k, l, .. } => ((i + k) % l, j),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Sigma { .. } => "sigma",
            TransformKind::Tau { .. } => "tau",
            TransformKind::Eps { .. } => "eps",
            TransformKind::Omega { .. } => "omega",
        }
    }
}

/// A transform together with the order its operand is flattened in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transform {
    pub kind: TransformKind,
    pub order: FlattenOrder,
}

impl Transform {
    pub fn new(kind: TransformKind, order: FlattenOrder) -> Self {
        Self { kind, order }
    }
}

/// Upper bounds on the number of non-zero diagonals of a transform.
///
/// `classic` is the closed form usually quoted for these transforms:
/// `2 min(m,l) - 1` for sigma, `2 min(n,l) - 1` for tau,
/// `floor(n/l) + 1` (column-major) / `(floor(n/l) + 2) m` (row-major) for eps,
/// `(floor(m/l) + 2) n` (column-major) / `floor(m/l) + 1` (row-major) for
/// omega, and 2 for eps with `n = l` or omega with `m = l`.
///
/// The eps column-major and omega row-major forms undercount when `l` does
/// not divide `n` (resp. `m`): the number of wrap points of `k m + i` over
/// `[0, m n)` modulo `m l` is `floor((k m + m n - 1) / (m l)) + 1`, which can
/// reach `ceil(n/l) + 1`. `sharp` uses that ceiling and always holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalBounds {
    pub classic: usize,
    pub sharp: usize,
}

pub fn diagonal_bounds(t: &Transform) -> DiagonalBounds {
    use FlattenOrder::*;
    let same = |b: usize| DiagonalBounds { classic: b, sharp: b };
    match (t.kind, t.order) {
        (TransformKind::Sigma { m, l }, _) => same(2 * m.min(l) - 1),
        (TransformKind::Tau { l, n }, _) => same(2 * n.min(l) - 1),
        (TransformKind::Eps { m, l, n, .. }, order) => {
            let (classic, sharp) = match order {
                ColumnMajor => (n / l + 1, n.div_ceil(l) + 1),
                RowMajor => ((n / l + 2) * m, (n / l + 2) * m),
            };
            if n == l {
                same(classic.min(2))
            } else {
                DiagonalBounds { classic, sharp }
            }
        }
        (TransformKind::Omega { l, m, n, .. }, order) => {
            let (classic, sharp) = match order {
                ColumnMajor => ((m / l + 2) * n, (m / l + 2) * n),
                RowMajor => (m / l + 1, m.div_ceil(l) + 1),
            };
            if m == l {
                same(classic.min(2))
            } else {
                DiagonalBounds { classic, sharp }
            }
        }
    }
}

/// A 0/1 matrix with at most one 1 per row, stored as the column of that 1.
///
/// Output slot `i` reads input slot `sources[i]` (or is zero). Columns may
/// hold several 1s, which is how cyclic duplication is expressed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationMatrix {
    rows: usize,
    cols: usize,
    sources: Vec<Option<usize>>,
}

impl PermutationMatrix {
    pub fn from_sources(rows: usize, cols: usize, sources: Vec<Option<usize>>) -> Result<Self> {
        if sources.len() != rows {
            return Err(Error::InvalidShape(format!("{} sources for {rows} rows", sources.len())));
        }
        if let Some(bad) = sources.iter().flatten().find(|&&c| c >= cols) {
            return Err(Error::InvalidShape(format!("source column {bad} outside {cols} columns")));
        }
        Ok(Self { rows, cols, sources })
    }

    /// Builds the slot map of a cell-level transform: output cell `(r, c)` of
    /// an `out` shaped matrix reads input cell `f(r, c)` of an `input` shaped
    /// one, both flattened with `order`.
    pub fn from_cell_map(
        input: (usize, usize),
        out: (usize, usize),
        order: FlattenOrder,
        f: impl Fn(usize, usize) -> Option<(usize, usize)>,
    ) -> Result<Self> {
        let mut sources = vec![None; out.0 * out.1];
        for r in 0..out.0 {
            for c in 0..out.1 {
                if let Some((sr, sc)) = f(r, c) {
                    if sr >= input.0 || sc >= input.1 {
                        return Err(Error::InvalidShape(format!(
                            "cell ({sr},{sc}) outside {}x{} input",
                            input.0, input.1
                        )));
                    }
                    sources[order.index(r, c, out.0, out.1)] = Some(order.index(sr, sc, input.0, input.1));
                }
            }
        }
        Self::from_sources(out.0 * out.1, input.0 * input.1, sources)
    }

    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let mut sources = Vec::with_capacity(rows);
        for (i, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidShape("ragged dense matrix".into()));
            }
            let ones: Vec<usize> = row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, _)| j).collect();
            match ones.as_slice() {
                [] => sources.push(None),
                [j] => sources.push(Some(*j)),
                _ => return Err(Error::InvalidShape(format!("row {i} has more than one 1"))),
            }
        }
        Self::from_sources(rows, cols, sources)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn source(&self, row: usize) -> Option<usize> {
        self.sources[row]
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        u8::from(self.sources[i] == Some(j))
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// Plaintext matrix-vector product.
    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::SegmentMismatch { left: self.cols, right: v.len() });
        }
        Ok(self.sources.iter().map(|s| s.map_or(0, |j| v[j])).collect())
    }

    /// Embeds into a `width x width` matrix with zero rows and columns.
    pub fn padded(&self, width: usize) -> Result<Self> {
        if width < self.rows || width < self.cols {
            return Err(Error::InvalidShape(format!("cannot embed {}x{} into width {width}", self.rows, self.cols)));
        }
        let mut sources = self.sources.clone();
        sources.resize(width, None);
        Ok(Self { rows: width, cols: width, sources })
    }
}

pub fn build_permutation(t: &Transform) -> Result<PermutationMatrix> {
    t.kind.validate()?;
    let kind = t.kind;
    PermutationMatrix::from_cell_map(kind.input_shape(), kind.output_shape(), t.order, |i, j| {
        Some(kind.source_cell(i, j))
    })
}

/// One non-zero generalized diagonal: offset `z = j - i` and the output
/// slots `i` where `U[i][i + z] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalEntry {
    pub offset: i64,
    positions: Vec<usize>,
}

impl DiagonalEntry {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Number of ones in the mask.
    pub fn weight(&self) -> usize {
        self.positions.len()
    }

    /// Dense 0/1 mask of length `len`.
    pub fn mask(&self, len: usize) -> Vec<i64> {
        let mut m = vec![0; len];
        for &p in &self.positions {
            m[p] = 1;
        }
        m
    }
}

/// Primitive-operation cost of evaluating a plan once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCost {
    pub rot: u64,
    pub mult_cp: u64,
    pub add: u64,
}

/// Diagonal decomposition of a [`PermutationMatrix`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalPlan {
    input_len: usize,
    output_len: usize,
    /// Lengths before any padding.
    logical: (usize, usize),
    entries: Vec<DiagonalEntry>,
}

impl DiagonalPlan {
    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Entries in ascending offset order.
    pub fn entries(&self) -> &[DiagonalEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the unpadded map is the identity, so evaluating it on a
    /// zero-padded input changes nothing.
    pub fn is_identity(&self) -> bool {
        let (input, output) = self.logical;
        input == output && matches!(self.entries.as_slice(), [e] if e.offset == 0 && e.weight() == output)
    }

    pub fn offsets(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.offset).collect()
    }

    pub fn cost(&self) -> PlanCost {
        let d = self.entries.len() as u64;
        let zero = self.entries.iter().any(|e| e.offset == 0) as u64;
        PlanCost { rot: d - zero, mult_cp: d, add: d.saturating_sub(1) }
    }

    pub fn reconstruct(&self) -> PermutationMatrix {
        let mut sources = vec![None; self.output_len];
        for e in &self.entries {
            for &i in &e.positions {
                sources[i] = Some((i as i64 + e.offset) as usize);
            }
        }
        PermutationMatrix { rows: self.output_len, cols: self.input_len, sources }
    }

    /// Same diagonals over a `width`-slot square working segment.
    pub fn padded(&self, width: usize) -> Result<Self> {
        if width < self.input_len || width < self.output_len {
            return Err(Error::InvalidShape(format!(
                "plan {}->{} does not fit width {width}",
                self.input_len, self.output_len
            )));
        }
        Ok(Self { input_len: width, output_len: width, logical: self.logical, entries: self.entries.clone() })
    }
}

pub fn extract_diagonals(u: &PermutationMatrix) -> DiagonalPlan {
    let mut by_offset: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, src) in u.sources.iter().enumerate() {
        if let Some(j) = *src {
            by_offset.entry(j as i64 - i as i64).or_default().push(i);
        }
    }
    DiagonalPlan {
        input_len: u.cols,
        output_len: u.rows,
        logical: (u.cols, u.rows),
        entries: by_offset.into_iter().map(|(offset, positions)| DiagonalEntry { offset, positions }).collect(),
    }
}

pub fn count_nonzero_diagonals(t: &Transform) -> Result<usize> {
    Ok(extract_diagonals(&build_permutation(t)?).len())
}

/// Evaluates `U.ct` homomorphically. The plan must be square over the
/// ciphertext's segment.
pub fn apply_plan<B: HeBackend>(ct: &B::Ciphertext, plan: &DiagonalPlan, backend: &B) -> Result<B::Ciphertext> {
    let s = backend.segment_len(ct);
    if plan.input_len != s || plan.output_len != s {
        return Err(Error::SegmentMismatch { left: s, right: plan.input_len.max(plan.output_len) });
    }
    if plan.entries.is_empty() {
        return Err(Error::InvalidShape("plan has no non-zero diagonals".into()));
    }
    let mut acc: Option<B::Ciphertext> = None;
    for e in &plan.entries {
        let term = if e.offset == 0 {
            backend.cmult(ct, &e.mask(s))?
        } else {
            backend.cmult(&backend.rot(ct, e.offset)?, &e.mask(s))?
        };
        acc = Some(match acc {
            None => term,
            Some(a) => backend.add(&a, &term)?,
        });
    }
    Ok(acc.expect("non-empty plan"))
}

/// Which axis a [`LayoutShift`] moves along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftAxis {
    Cols,
    Rows,
}

/// Shift by `k` over a canvas whose columns (or rows) repeat with `period`.
///
/// Output cell `(i, j)` reads column `j + k` of the canvas, or `j + k -
/// period` when that runs past its edge. On a cyclically replicated canvas
/// this equals a shift by `k` modulo `period`, yet costs at most two
/// diagonals in either flattening order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayoutShift {
    pub axis: ShiftAxis,
    pub k: usize,
    pub period: usize,
    pub shape: (usize, usize),
    pub order: FlattenOrder,
}

impl LayoutShift {
    pub fn validate(&self) -> Result<()> {
        let len = match self.axis {
            ShiftAxis::Cols => self.shape.1,
            ShiftAxis::Rows => self.shape.0,
        };
        if self.period == 0 || self.k >= self.period || len < self.period || self.shape.0 == 0 || self.shape.1 == 0 {
            return Err(Error::InvalidShape(format!("invalid layout shift {self:?}")));
        }
        Ok(())
    }

    fn shifted(&self, x: usize, len: usize) -> usize {
        let y = x + self.k;
        if y >= len {
            y - self.period
        } else {
            y
        }
    }

    pub fn permutation(&self) -> Result<PermutationMatrix> {
        self.validate()?;
        let (rows, cols) = self.shape;
        PermutationMatrix::from_cell_map(self.shape, self.shape, self.order, |i, j| {
            Some(match self.axis {
                ShiftAxis::Cols => (i, self.shifted(j, cols)),
                ShiftAxis::Rows => (self.shifted(i, rows), j),
            })
        })
    }
}

/// Anything a plan can be built from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PlanSource {
    Canonical(Transform),
    Shift(LayoutShift),
}

impl PlanSource {
    pub fn permutation(&self) -> Result<PermutationMatrix> {
        match self {
            PlanSource::Canonical(t) => build_permutation(t),
            PlanSource::Shift(s) => s.permutation(),
        }
    }
}

/// Read-mostly cache of plans padded to a working width.
#[derive(Debug, Default)]
pub struct PlanCache {
    plans: RwLock<HashMap<(PlanSource, usize), Arc<DiagonalPlan>>>,
    capacity: usize,
}

impl PlanCache {
    pub fn with_capacity(capacity: usize) -> Self {
        Self { plans: RwLock::new(HashMap::new()), capacity }
    }

    /// Process-wide cache shared by the algorithms.
    pub fn global() -> &'static PlanCache {
        static CACHE: OnceLock<PlanCache> = OnceLock::new();
        CACHE.get_or_init(|| PlanCache::with_capacity(1024))
    }

    pub fn get(&self, source: &PlanSource, width: usize) -> Result<Arc<DiagonalPlan>> {
        let key = (source.clone(), width);
        if let Some(p) = self.plans.read().expect("plan cache poisoned").get(&key) {
            return Ok(Arc::clone(p));
        }
        let plan = Arc::new(extract_diagonals(&source.permutation()?).padded(width)?);
        let mut w = self.plans.write().expect("plan cache poisoned");
        if self.capacity > 0 && w.len() >= self.capacity {
            w.clear();
        }
        Ok(Arc::clone(w.entry(key).or_insert(plan)))
    }

    pub fn len(&self) -> usize {
        self.plans.read().expect("plan cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
