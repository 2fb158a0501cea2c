//! The basic algorithm: `l` iterations of shift, shift, multiply, add.

use crate::backend::{HeBackend, OpStats, Phase, PhaseCounts};
use crate::error::Result;
use crate::lintrans::{PlanSource, Transform, TransformKind};
use crate::matrix::{sigma, tau, FlattenOrder, Matrix};

use super::{
    accumulate, cached_plan, check_capacity, check_dims, check_operands, plan_counts, run_plan, Preprocess, RunOptions,
};

/// Working segment: large enough for both operands and the result.
pub fn hegmm_slots(m: usize, l: usize, n: usize) -> usize {
    (m * l).max(l * n).max(m * n)
}

pub fn hegmm<B: HeBackend>(a: &Matrix, b: &Matrix, backend: &B) -> Result<Matrix> {
    hegmm_with(a, b, &RunOptions::default(), backend)
}

pub fn hegmm_with<B: HeBackend>(a: &Matrix, b: &Matrix, opts: &RunOptions, backend: &B) -> Result<Matrix> {
    let (m, l, n) = check_operands(a, b)?;
    let width = hegmm_slots(m, l, n);
    check_capacity(width, backend)?;
    let order = opts.order.unwrap_or(FlattenOrder::ColumnMajor);
    let canonical = |kind| cached_plan(PlanSource::Canonical(Transform::new(kind, order)), width);

    backend.set_phase(Phase::Client);
    let (ct_a, ct_b) = match opts.preprocess {
        Preprocess::Plaintext => {
            let ct_a = backend.encrypt_slots(sigma(a).flatten(order).values(), width)?;
            let ct_b = backend.encrypt_slots(tau(b).flatten(order).values(), width)?;
            (ct_a, ct_b)
        }
        Preprocess::Encrypted => {
            let raw_a = backend.encrypt_slots(a.flatten(order).values(), width)?;
            let raw_b = backend.encrypt_slots(b.flatten(order).values(), width)?;
            backend.set_phase(Phase::Cloud);
            let ct_a = run_plan(&raw_a, &*canonical(TransformKind::Sigma { m, l })?, backend)?;
            let ct_b = run_plan(&raw_b, &*canonical(TransformKind::Tau { l, n })?, backend)?;
            (ct_a, ct_b)
        }
    };

    backend.set_phase(Phase::Cloud);
    let mut acc = None;
    for k in 0..l {
        let x = run_plan(&ct_a, &*canonical(TransformKind::Eps { k, m, l, n })?, backend)?;
        let y = run_plan(&ct_b, &*canonical(TransformKind::Omega { k, l, m, n })?, backend)?;
        let product = backend.mult(&x, &y)?;
        acc = Some(accumulate(acc, product, backend)?);
    }
    let acc = acc.expect("l >= 1");

    backend.set_phase(Phase::Client);
    let slots = backend.decrypt(&acc)?;
    Matrix::from_slots(&slots, order, m, n, m, n)
}

pub fn predict_hegmm(m: usize, l: usize, n: usize, opts: &RunOptions) -> Result<OpStats> {
    check_dims(m, l, n)?;
    let width = hegmm_slots(m, l, n);
    let order = opts.order.unwrap_or(FlattenOrder::ColumnMajor);
    let cost = |kind| -> Result<PhaseCounts> {
        Ok(plan_counts(&*cached_plan(PlanSource::Canonical(Transform::new(kind, order)), width)?))
    };
    let client = PhaseCounts { encrypt: 2, decrypt: 1, ..PhaseCounts::default() };
    let mut cloud = PhaseCounts::default();
    if opts.preprocess == Preprocess::Encrypted {
        cloud = cloud + cost(TransformKind::Sigma { m, l })? + cost(TransformKind::Tau { l, n })?;
    }
    for k in 0..l {
        cloud = cloud + cost(TransformKind::Eps { k, m, l, n })? + cost(TransformKind::Omega { k, l, m, n })?;
    }
    cloud.mult_cc += l as u64;
    cloud.add += l as u64 - 1;
    Ok(OpStats { client, cloud })
}

/// Zero-pads both operands to `d x d` with `d = max(m, l, n)` and runs the
/// basic algorithm.
pub fn square_pad_mm<B: HeBackend>(a: &Matrix, b: &Matrix, backend: &B) -> Result<Matrix> {
    square_pad_mm_with(a, b, &RunOptions::default(), backend)
}

pub fn square_pad_mm_with<B: HeBackend>(a: &Matrix, b: &Matrix, opts: &RunOptions, backend: &B) -> Result<Matrix> {
    let (m, l, n) = check_operands(a, b)?;
    let d = m.max(l).max(n);
    check_capacity(d * d, backend)?;
    let product = hegmm_with(&a.pad_to(d, d)?, &b.pad_to(d, d)?, opts, backend)?;
    product.block(0, 0, m, n)
}

pub fn predict_square_pad(m: usize, l: usize, n: usize, opts: &RunOptions) -> Result<OpStats> {
    check_dims(m, l, n)?;
    let d = m.max(l).max(n);
    predict_hegmm(d, d, d, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::Algorithm;
    use crate::backend::SimdEmulator;
    use crate::error::Error;
    use crate::matrix::naive_matmul;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn run(algo: Algorithm, a: &Matrix, b: &Matrix, opts: &RunOptions) -> (Matrix, OpStats) {
        let backend = SimdEmulator::with_slots(4096).unwrap();
        let c = crate::algos::multiply(algo, a, b, opts, &backend).unwrap();
        (c, backend.stats())
    }

    #[test]
    fn five_by_three_times_three_by_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Matrix::random(5, 3, -20, 20, &mut rng);
        let b = Matrix::random(3, 4, -20, 20, &mut rng);
        let (c, stats) = run(Algorithm::Hegmm, &a, &b, &RunOptions::default());
        assert_eq!(c, naive_matmul(&a, &b).unwrap());
        assert_eq!(stats.cloud.mult_cc, 3);
        assert_eq!(stats.client.mult_cc, 0);
        assert_eq!(stats.client.primitives(), 0);
    }

    #[test]
    fn identity_left_operand() {
        let b = Matrix::from_fn(4, 4, |r, c| (r * 4 + c) as i64 - 7);
        let (c, _) = run(Algorithm::Hegmm, &Matrix::identity(4), &b, &RunOptions::default());
        assert_eq!(c, b);
    }

    #[test]
    fn random_sweep_matches_oracle_and_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..100 {
            let (m, l, n) = (rng.gen_range(1..=16), rng.gen_range(1..=16), rng.gen_range(1..=16));
            let a = Matrix::random(m, l, -30, 30, &mut rng);
            let b = Matrix::random(l, n, -30, 30, &mut rng);
            let opts = RunOptions {
                order: Some(if i % 2 == 0 { FlattenOrder::ColumnMajor } else { FlattenOrder::RowMajor }),
                preprocess: if i % 3 == 0 { Preprocess::Encrypted } else { Preprocess::Plaintext },
            };
            let (c, stats) = run(Algorithm::Hegmm, &a, &b, &opts);
            assert_eq!(c, naive_matmul(&a, &b).unwrap(), "({m},{l},{n})");
            assert_eq!(stats.cloud.mult_cc, l as u64);
            assert_eq!(stats, predict_hegmm(m, l, n, &opts).unwrap(), "({m},{l},{n}) {opts:?}");
        }
    }

    #[test]
    fn encrypted_preprocess_moves_permutations_to_cloud() {
        let a = Matrix::from_fn(3, 4, |r, c| (r + 2 * c) as i64);
        let b = Matrix::from_fn(4, 2, |r, c| (3 * r + c) as i64);
        let (_, plain) = run(Algorithm::Hegmm, &a, &b, &RunOptions::default());
        let opts = RunOptions { preprocess: Preprocess::Encrypted, ..RunOptions::default() };
        let (c, enc) = run(Algorithm::Hegmm, &a, &b, &opts);
        assert_eq!(c, naive_matmul(&a, &b).unwrap());
        assert!(enc.cloud.rot > plain.cloud.rot);
        assert_eq!(enc.client, plain.client);
    }

    #[test]
    fn square_pad_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::random(5, 3, -9, 9, &mut rng);
        let b = Matrix::random(3, 4, -9, 9, &mut rng);
        let (c, stats) = run(Algorithm::SquarePad, &a, &b, &RunOptions::default());
        assert_eq!(c, naive_matmul(&a, &b).unwrap());
        assert_eq!(stats.cloud.mult_cc, 5);

        let a = Matrix::random(2, 5, -9, 9, &mut rng);
        let b = Matrix::random(5, 7, -9, 9, &mut rng);
        let (c, stats) = run(Algorithm::SquarePad, &a, &b, &RunOptions::default());
        assert_eq!(c, naive_matmul(&a, &b).unwrap());
        assert_eq!(stats.cloud.mult_cc, 7);
    }

    #[test]
    fn square_pad_on_square_input_equals_hegmm() {
        let a = Matrix::from_fn(6, 6, |r, c| (r * c) as i64 % 5);
        let (x, sx) = run(Algorithm::SquarePad, &a, &a, &RunOptions::default());
        let (y, sy) = run(Algorithm::Hegmm, &a, &a, &RunOptions::default());
        assert_eq!(x, y);
        assert_eq!(sx, sy);
    }

    #[test]
    fn capacity_and_dimension_errors() {
        let backend = SimdEmulator::with_slots(64).unwrap();
        let a = Matrix::zeros(9, 8);
        let b = Matrix::zeros(8, 2);
        assert!(matches!(hegmm(&a, &b, &backend), Err(Error::Capacity { needed: 72, available: 64 })));
        assert!(matches!(hegmm(&a, &a, &backend), Err(Error::DimensionMismatch(_))));
        let a = Matrix::zeros(2, 9);
        let b = Matrix::zeros(9, 2);
        assert!(matches!(square_pad_mm(&a, &b, &backend), Err(Error::Capacity { needed: 81, .. })));
        assert_eq!(backend.stats(), OpStats::default());
    }

    #[test]
    fn modular_run_matches_modular_oracle() {
        use crate::backend::BackendConfig;
        let backend = SimdEmulator::new(BackendConfig { slot_count: 256, plaintext_modulus: Some(65537) }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Matrix::random(7, 5, 0, 65536, &mut rng);
        let b = Matrix::random(5, 6, 0, 65536, &mut rng);
        let c = hegmm(&a, &b, &backend).unwrap();
        let arith = backend.arithmetic();
        assert_eq!(c, crate::matrix::naive_matmul_in(&a, &b, arith).unwrap());
    }
}
