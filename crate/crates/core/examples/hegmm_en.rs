//! The enhanced algorithm: duplicate the thin operand so the product takes
//! min(m, l, n) ciphertext multiplications, then fold the partial blocks.
use hegemm::matrix::naive_matmul;
use hegemm::{hegmm, hegmm_en, select_strategy, HeBackend, Matrix, SimdEmulator};
use rand::SeedableRng;

fn main() -> hegemm::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for (m, l, n) in [(2, 5, 7), (5, 4, 2), (3, 10, 2), (6, 6, 6)] {
        let s = select_strategy(m, l, n)?;
        println!(
            "({m},{l},{n}): p={} t={} {:?}, working {:?}, canvas {:?}, {} redundant partial(s)",
            s.p,
            s.t,
            s.duplicated,
            s.working,
            s.canvas,
            s.redundant_count()
        );
        for it in &s.schedule {
            println!("  k={} partials {:?} redundant {:?}", it.k, it.partials, it.redundant);
        }

        let a = Matrix::random(m, l, -20, 20, &mut rng);
        let b = Matrix::random(l, n, -20, 20, &mut rng);
        let basic = SimdEmulator::with_slots(256)?;
        let enhanced = SimdEmulator::with_slots(256)?;
        let c = hegmm_en(&a, &b, &enhanced)?;
        assert_eq!(c, hegmm(&a, &b, &basic)?);
        assert_eq!(c, naive_matmul(&a, &b)?);
        println!(
            "  ciphertext products: basic {}, enhanced {}",
            basic.stats().cloud.mult_cc,
            enhanced.stats().cloud.mult_cc
        );
    }
    Ok(())
}
