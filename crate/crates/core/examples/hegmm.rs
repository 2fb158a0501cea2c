//! The basic encrypted multiplication on an arbitrary shape, with the
//! operation counts it predicts and the counts the emulator observed.
use hegemm::algos::hegmm::predict_hegmm;
use hegemm::matrix::naive_matmul;
use hegemm::{hegmm, HeBackend, Matrix, Preprocess, RunOptions, SimdEmulator};
use rand::SeedableRng;

fn main() -> hegemm::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (m, l, n) = (5, 3, 4);
    let a = Matrix::random(m, l, -50, 50, &mut rng);
    let b = Matrix::random(l, n, -50, 50, &mut rng);

    let backend = SimdEmulator::with_slots(64)?;
    let c = hegmm(&a, &b, &backend)?;
    assert_eq!(c, naive_matmul(&a, &b)?);
    println!("C = A x B ({m}x{l} by {l}x{n}) =\n{c}");
    println!("observed  {:?}", backend.stats());
    println!("predicted {:?}", predict_hegmm(m, l, n, &RunOptions::default())?);

    let opts = RunOptions { preprocess: Preprocess::Encrypted, ..RunOptions::default() };
    let backend = SimdEmulator::with_slots(64)?;
    hegemm::algos::hegmm::hegmm_with(&a, &b, &opts, &backend)?;
    println!("with encrypted preprocessing: cloud {:?}", backend.stats().cloud);
    Ok(())
}
