//! Splitting a product that does not fit one ciphertext into blocks.
use hegemm::algos::block_schedule;
use hegemm::matrix::naive_matmul;
use hegemm::{blocked_mm, Algorithm, BlockPlan, HeBackend, Matrix, RunOptions, SimdEmulator};
use rand::SeedableRng;

fn main() -> hegemm::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
    let d = 100;
    let a = Matrix::random(d, d, -100, 100, &mut rng);
    let b = Matrix::random(d, d, -100, 100, &mut rng);
    let expect = naive_matmul(&a, &b)?;
    let slots = 4096;
    println!("one {d}x{d}x{d} product needs {} slots", Algorithm::Hegmm.required_slots(d, d, d));

    for (name, plan) in [("P1", BlockPlan::p1(d, d, d)), ("P2", BlockPlan::p2(d, d, d))] {
        println!("{name}: rows {:?} inner {:?} cols {:?}", plan.row_cuts, plan.inner_cuts, plan.col_cuts);
        for task in block_schedule(&plan, Algorithm::HegmmEn, slots)? {
            println!("  block {:?} at {:?} via {}", task.dims, task.origin, task.algorithm);
        }
        let backend = SimdEmulator::with_slots(slots)?;
        let c = blocked_mm(&a, &b, &plan, Algorithm::HegmmEn, &RunOptions::default(), &backend)?;
        assert_eq!(c, expect);
        println!("  exact; cloud {:?}", backend.stats().cloud);
    }
    Ok(())
}
