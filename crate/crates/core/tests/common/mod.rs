#![allow(dead_code)]

use hegemm::algos::enhanced::{client_canvases, partial_schedule};
use hegemm::lintrans::{LayoutShift, ShiftAxis};
use hegemm::matrix::{duplicate_horizontal, duplicate_vertical, eps, omega, sigma, tau};
use hegemm::{select_strategy, Arithmetic, FlattenOrder, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One partial product of the element-wise expansion, `m x n`.
pub fn partial(a: &Matrix, b: &Matrix, j: usize) -> Matrix {
    let (m, n) = (a.rows(), b.cols());
    eps(&sigma(a), j, m, n).unwrap().hadamard(&omega(&tau(b), j, m, n).unwrap(), Arithmetic::EXACT).unwrap()
}

/// Stacked product of iteration `k` built straight from the operator
/// definitions on the duplicated operands.
pub fn stacked_by_definition(a: &Matrix, b: &Matrix, k: usize, vertical: bool, t: usize) -> Matrix {
    if vertical {
        let a_dup = duplicate_vertical(a, t).unwrap();
        let (rows, n) = (a_dup.rows(), b.cols());
        eps(&sigma(&a_dup), k, rows, n)
            .unwrap()
            .hadamard(&omega(&tau(b), k, rows, n).unwrap(), Arithmetic::EXACT)
            .unwrap()
    } else {
        let b_dup = duplicate_horizontal(b, t).unwrap();
        let (m, cols) = (a.rows(), b_dup.cols());
        eps(&sigma(a), k, m, cols)
            .unwrap()
            .hadamard(&omega(&tau(&b_dup), k, m, cols).unwrap(), Arithmetic::EXACT)
            .unwrap()
    }
}

/// The same product computed the way the cloud does: layout shifts on the
/// replicated canvases.
pub fn stacked_on_canvas(a: &Matrix, b: &Matrix, k: usize, order: FlattenOrder) -> Matrix {
    let s = select_strategy(a.rows(), a.cols(), b.cols()).unwrap();
    let (x, y) = client_canvases(a, b, &s).unwrap();
    let shift = |axis, src: &Matrix| {
        let p = LayoutShift { axis, k, period: s.l, shape: s.canvas, order }.permutation().unwrap();
        let v = p.apply(src.flatten(order).values()).unwrap();
        Matrix::from_slots(&v, order, s.canvas.0, s.canvas.1, s.canvas.0, s.canvas.1).unwrap()
    };
    let z = shift(ShiftAxis::Cols, &x).hadamard(&shift(ShiftAxis::Rows, &y), Arithmetic::EXACT).unwrap();
    z.block(0, 0, s.working.0, s.working.1).unwrap()
}

#[derive(Debug, Default)]
pub struct ContainmentOutcome {
    pub cases: usize,
    pub failures: Vec<String>,
}

/// Random cases with the duplicated operand on the chosen side; checks
/// block equality, coverage of every partial index, and that redundancy
/// appears exactly when `t p > l`.
pub fn containment_sweep(vertical: bool, cases: usize, seed: u64) -> ContainmentOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ContainmentOutcome::default();
    while out.cases < cases {
        let thin: usize = rng.gen_range(1..=6);
        let l = rng.gen_range(thin + 1..=thin + 12);
        let other = rng.gen_range(thin + 1..=thin + 8);
        let (m, n) = if vertical { (thin, other) } else { (other, thin) };
        let p = thin;
        let t = l.div_ceil(p);
        let a = Matrix::random(m, l, -50, 50, &mut rng);
        let b = Matrix::random(l, n, -50, 50, &mut rng);
        out.cases += 1;
        let tag = format!("({m},{l},{n})");
        for k in 0..p {
            let by_def = stacked_by_definition(&a, &b, k, vertical, t);
            for order in FlattenOrder::BOTH {
                if stacked_on_canvas(&a, &b, k, order) != by_def {
                    out.failures.push(format!("{tag} k={k} {order}: canvas product differs"));
                }
            }
            for h in 0..t {
                let block = if vertical {
                    by_def.block(h * m, 0, m, n).unwrap()
                } else {
                    by_def.block(0, h * n, m, n).unwrap()
                };
                if block != partial(&a, &b, (k + h * p) % l) {
                    out.failures.push(format!("{tag} k={k} block {h} is not partial {}", (k + h * p) % l));
                }
            }
        }
        let sched = partial_schedule(l, p, t);
        let mut fresh: Vec<usize> = sched.iter().flat_map(|s| s.fresh().collect::<Vec<_>>()).collect();
        fresh.sort_unstable();
        if fresh != (0..l).collect::<Vec<_>>() {
            out.failures.push(format!("{tag}: partial indices do not cover 0..{l} exactly once"));
        }
        let redundant = sched.iter().any(|s| s.has_redundant());
        if redundant != (t * p > l) {
            out.failures.push(format!("{tag}: redundancy {redundant} but t*p={} l={l}", t * p));
        }
    }
    out
}
