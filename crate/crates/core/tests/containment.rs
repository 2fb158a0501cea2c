mod common;

use common::containment_sweep;

#[test]
fn duplicated_a_blocks_hold_partials() {
    let r = containment_sweep(true, 100, 51);
    assert_eq!(r.cases, 100);
    assert!(r.failures.is_empty(), "{:#?}", r.failures);
}

#[test]
fn duplicated_b_blocks_hold_partials() {
    let r = containment_sweep(false, 100, 52);
    assert_eq!(r.cases, 100);
    assert!(r.failures.is_empty(), "{:#?}", r.failures);
}
