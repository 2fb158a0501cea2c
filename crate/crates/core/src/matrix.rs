//! Exact-integer matrices and the cleartext matrix transforms.
//!
//! The four index transforms used by the element-wise product are
//!
//! * `sigma(A)[i][j]   = A[i][(i + j) mod l]`  (row `i` rotated left by `i`)
//! * `tau(B)[i][j]     = B[(i + j) mod l][j]`  (column `j` rotated up by `j`)
//! * `eps^k(A)[i][j]   = A[i][(j + k) mod l]`  (column shift, resized to `out_rows x out_cols`)
//! * `omega^k(B)[i][j] = B[(i + k) mod l][j]`  (row shift, resized to `out_rows x out_cols`)
//!
//! and `A x B = sum_k eps^k(sigma(A)) (.) omega^k(tau(B))` for `k` in `0..l`.
//! Everything here is plaintext and doubles as the oracle layer for the
//! encrypted algorithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer arithmetic, either exact (overflow is an error) or reduced modulo
/// a plaintext modulus into `[0, q)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arithmetic {
    modulus: Option<i64>,
}

impl Arithmetic {
    pub const EXACT: Arithmetic = Arithmetic { modulus: None };

    pub fn modular(q: i64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidConfig(format!("plaintext modulus must be at least 2, got {q}")));
        }
        Ok(Self { modulus: Some(q) })
    }

    pub fn new(modulus: Option<i64>) -> Result<Self> {
        match modulus {
            None => Ok(Self::EXACT),
            Some(q) => Self::modular(q),
        }
    }

    pub fn modulus(&self) -> Option<i64> {
        self.modulus
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> i64 {
        match self.modulus {
            None => x,
            Some(q) => x.rem_euclid(q),
        }
    }

    #[inline]
    pub fn add(&self, a: i64, b: i64) -> Result<i64> {
        match self.modulus {
            None => a.checked_add(b).ok_or(Error::Overflow("addition")),
            Some(q) => Ok(((a as i128 + b as i128).rem_euclid(q as i128)) as i64),
        }
    }

    #[inline]
    pub fn mul(&self, a: i64, b: i64) -> Result<i64> {
        match self.modulus {
            None => a.checked_mul(b).ok_or(Error::Overflow("multiplication")),
            Some(q) => Ok(((a as i128 * b as i128).rem_euclid(q as i128)) as i64),
        }
    }
}

/// Serialization order used when a matrix is packed into slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlattenOrder {
    ColumnMajor,
    RowMajor,
}

impl FlattenOrder {
    pub const BOTH: [FlattenOrder; 2] = [FlattenOrder::ColumnMajor, FlattenOrder::RowMajor];

    /// Slot index of cell `(r, c)` in a `rows x cols` matrix.
    #[inline]
    pub fn index(self, r: usize, c: usize, rows: usize, cols: usize) -> usize {
        match self {
            FlattenOrder::ColumnMajor => r + c * rows,
            FlattenOrder::RowMajor => r * cols + c,
        }
    }

    /// Inverse of [`FlattenOrder::index`].
    #[inline]
    pub fn cell(self, idx: usize, rows: usize, cols: usize) -> (usize, usize) {
        match self {
            FlattenOrder::ColumnMajor => (idx % rows, idx / rows),
            FlattenOrder::RowMajor => (idx / cols, idx % cols),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            FlattenOrder::ColumnMajor => "col",
            FlattenOrder::RowMajor => "row",
        }
    }
}

impl std::fmt::Display for FlattenOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlattenOrder::ColumnMajor => "column-major",
            FlattenOrder::RowMajor => "row-major",
        })
    }
}

/// A flattened matrix: the values a client packs into a ciphertext.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatVector {
    values: Vec<i64>,
    rows: usize,
    cols: usize,
    order: FlattenOrder,
}

impl FlatVector {
    pub fn new(values: Vec<i64>, rows: usize, cols: usize, order: FlattenOrder) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "flat vector of {} values cannot describe a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { values, rows, cols, order })
    }

    /// A single-row vector, handy for packing raw slot data.
    pub fn from_values(values: Vec<i64>) -> Self {
        let cols = values.len();
        Self { values, rows: 1, cols, order: FlattenOrder::RowMajor }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn logical_rows(&self) -> usize {
        self.rows
    }

    pub fn logical_cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> FlattenOrder {
        self.order
    }
}

/// Dense row-major matrix of exact integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Matrix::new(r.rows, r.cols, r.data)
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr { rows: m.rows, cols: m.cols, data: m.data }
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or empty input;
    /// meant for literals in tests and examples.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.as_ref().len(), c, "ragged matrix literal");
            data.extend_from_slice(row.as_ref());
        }
        Self::new(r, c, data).expect("matrix literal must be non-empty")
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| 0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| i64::from(r == c))
    }

    /// Uniformly random entries in `lo..=hi`.
    pub fn random<R: rand::Rng + ?Sized>(rows: usize, cols: usize, lo: i64, hi: i64, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.gen_range(lo..=hi))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn flatten(&self, order: FlattenOrder) -> FlatVector {
        let mut values = vec![0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                values[order.index(r, c, self.rows, self.cols)] = self.get(r, c);
            }
        }
        FlatVector { values, rows: self.rows, cols: self.cols, order }
    }

    pub fn unflatten(v: &FlatVector) -> Result<Self> {
        let (rows, cols, order) = (v.rows, v.cols, v.order);
        let m = Self::new(rows, cols, vec![0; rows * cols])?;
        Ok(Self::from_fn(m.rows, m.cols, |r, c| v.values[order.index(r, c, rows, cols)]))
    }

    /// Reads a `rows x cols` matrix out of a slot vector laid out with
    /// `order` over a `full_rows x full_cols` frame, keeping the top-left block.
    pub fn from_slots(
        slots: &[i64],
        order: FlattenOrder,
        full_rows: usize,
        full_cols: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        if rows > full_rows || cols > full_cols || slots.len() < full_rows * full_cols {
            return Err(Error::InvalidShape(format!(
                "cannot read {rows}x{cols} from a {full_rows}x{full_cols} frame of {} slots",
                slots.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |r, c| slots[order.index(r, c, full_rows, full_cols)]))
    }

    /// Copy of the `rows x cols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<Self> {
        if r0 + rows > self.rows || c0 + cols > self.cols || rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "block {rows}x{cols} at ({r0},{c0}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(rows, cols, |r, c| self.get(r0 + r, c0 + c)))
    }

    /// Zero-pads to `rows x cols` (each at least the current size).
    pub fn pad_to(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::InvalidShape(format!("cannot pad {}x{} down to {rows}x{cols}", self.rows, self.cols)));
        }
        Ok(Self::from_fn(rows, cols, |r, c| if r < self.rows && c < self.cols { self.get(r, c) } else { 0 }))
    }

    pub fn add_checked(&self, other: &Matrix, arith: Arithmetic) -> Result<Self> {
        self.zip_with(other, |a, b| arith.add(a, b))
    }

    /// Element-wise (Hadamard) product.
    pub fn hadamard(&self, other: &Matrix, arith: Arithmetic) -> Result<Self> {
        self.zip_with(other, |a, b| arith.mul(a, b))
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(i64, i64) -> Result<i64>) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect::<Result<Vec<_>>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Writes `block` into `self` at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) -> Result<()> {
        if r0 + block.rows > self.rows || c0 + block.cols > self.cols {
            return Err(Error::InvalidShape("block does not fit".into()));
        }
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.data[(r0 + r) * self.cols + c0 + c] = block.get(r, c);
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `sigma(A)[i][j] = A[i][(i + j) mod l]`.
pub fn sigma(a: &Matrix) -> Matrix {
    let l = a.cols;
    Matrix::from_fn(a.rows, l, |i, j| a.get(i, (i + j) % l))
}

/// `tau(B)[i][j] = B[(i + j) mod l][j]`.
pub fn tau(b: &Matrix) -> Matrix {
    let l = b.rows;
    Matrix::from_fn(l, b.cols, |i, j| b.get((i + j) % l, j))
}

/// Column shift by `k`, cyclically duplicating or cropping columns to
/// `out_cols`. `out_rows` must match the source.
pub fn eps(a: &Matrix, k: usize, out_rows: usize, out_cols: usize) -> Result<Matrix> {
    if out_rows != a.rows || out_cols == 0 {
        return Err(Error::DimensionMismatch(format!(
            "eps maps {}x{} to {out_rows}x{out_cols}; row counts must agree",
            a.rows, a.cols
        )));
    }
    let l = a.cols;
    Ok(Matrix::from_fn(out_rows, out_cols, |i, j| a.get(i, (j + k) % l)))
}

/// Row shift by `k`, cyclically duplicating or cropping rows to `out_rows`.
/// `out_cols` must match the source.
pub fn omega(b: &Matrix, k: usize, out_rows: usize, out_cols: usize) -> Result<Matrix> {
    if out_cols != b.cols || out_rows == 0 {
        return Err(Error::DimensionMismatch(format!(
            "omega maps {}x{} to {out_rows}x{out_cols}; column counts must agree",
            b.rows, b.cols
        )));
    }
    let l = b.rows;
    Ok(Matrix::from_fn(out_rows, out_cols, |i, j| b.get((i + k) % l, j)))
}

fn check_inner(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// Triple-loop product with exact arithmetic.
pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    naive_matmul_in(a, b, Arithmetic::EXACT)
}

/// Triple-loop product under the given arithmetic.
pub fn naive_matmul_in(a: &Matrix, b: &Matrix, arith: Arithmetic) -> Result<Matrix> {
    check_inner(a, b)?;
    let mut data = Vec::with_capacity(a.rows * b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = 0i64;
            for k in 0..a.cols {
                acc = arith.add(acc, arith.mul(a.get(i, k), b.get(k, j))?)?;
            }
            data.push(arith.reduce(acc));
        }
    }
    Matrix::new(a.rows, b.cols, data)
}

/// Cleartext element-wise product: the sum over `k` of
/// `eps^k(sigma(A)) (.) omega^k(tau(B))`.
pub fn elementwise_mm(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    elementwise_mm_in(a, b, Arithmetic::EXACT)
}

pub fn elementwise_mm_in(a: &Matrix, b: &Matrix, arith: Arithmetic) -> Result<Matrix> {
    check_inner(a, b)?;
    let (m, l, n) = (a.rows, a.cols, b.cols);
    let sa = sigma(a);
    let tb = tau(b);
    let mut acc = Matrix::zeros(m, n);
    for k in 0..l {
        let partial = eps(&sa, k, m, n)?.hadamard(&omega(&tb, k, m, n)?, arith)?;
        acc = acc.add_checked(&partial, arith)?;
    }
    Ok(acc)
}

/// `t` copies of `a` stacked vertically.
pub fn duplicate_vertical(a: &Matrix, t: usize) -> Result<Matrix> {
    if t == 0 {
        return Err(Error::InvalidShape("duplication count must be at least 1".into()));
    }
    Ok(Matrix::from_fn(a.rows * t, a.cols, |r, c| a.get(r % a.rows, c)))
}

/// `t` copies of `b` side by side.
pub fn duplicate_horizontal(b: &Matrix, t: usize) -> Result<Matrix> {
    if t == 0 {
        return Err(Error::InvalidShape("duplication count must be at least 1".into()));
    }
    Ok(Matrix::from_fn(b.rows, b.cols * t, |r, c| b.get(r, c % b.cols)))
}
