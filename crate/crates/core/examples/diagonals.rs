//! Generalized diagonals of the permutation behind a shift, and evaluating
//! it on an encrypted vector with rotations and plaintext products.
use hegemm::lintrans::{apply_plan, build_permutation, diagonal_bounds, extract_diagonals};
use hegemm::matrix::eps;
use hegemm::{FlattenOrder, HeBackend, Matrix, Phase, SimdEmulator, Transform, TransformKind};

fn main() -> hegemm::Result<()> {
    for order in FlattenOrder::BOTH {
        let t = Transform::new(TransformKind::Eps { k: 1, m: 5, l: 3, n: 3 }, order);
        let plan = extract_diagonals(&build_permutation(&t)?);
        let bounds = diagonal_bounds(&t);
        println!("eps^1 on 5x3, {order}: {} diagonals (bound {}, sharp {})", plan.len(), bounds.classic, bounds.sharp);
        for e in plan.entries() {
            println!("  offset {:+} weight {}", e.offset, e.weight());
        }
    }

    // l = 3 does not divide n = 2: one more diagonal than the floor bound.
    let t = Transform::new(TransformKind::Eps { k: 2, m: 1, l: 3, n: 2 }, FlattenOrder::ColumnMajor);
    let plan = extract_diagonals(&build_permutation(&t)?);
    println!("eps^2 on 1x3 -> 1x2: {} diagonals, bounds {:?}", plan.len(), diagonal_bounds(&t));

    let a = Matrix::from_fn(5, 3, |r, c| (10 * r + c) as i64);
    let t = Transform::new(TransformKind::Eps { k: 1, m: 5, l: 3, n: 3 }, FlattenOrder::ColumnMajor);
    let plan = extract_diagonals(&build_permutation(&t)?);
    let backend = SimdEmulator::with_slots(16)?;
    let ct = backend.encrypt(&a.flatten(FlattenOrder::ColumnMajor))?;
    backend.set_phase(Phase::Cloud);
    let out = apply_plan(&ct, &plan, &backend)?;
    backend.set_phase(Phase::Client);
    let slots = backend.decrypt(&out)?;
    let got = Matrix::from_slots(&slots, FlattenOrder::ColumnMajor, 5, 3, 5, 3)?;
    assert_eq!(got, eps(&a, 1, 5, 3)?);
    println!("encrypted eps^1(A) =\n{got}cloud ops: {:?}", backend.stats().cloud);
    Ok(())
}
