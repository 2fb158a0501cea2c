//! Matrix product as a sum of element-wise products of shifted operands,
//! entirely in the clear.
use hegemm::matrix::{eps, naive_matmul, omega, sigma, tau, Arithmetic};
use hegemm::Matrix;

fn main() -> hegemm::Result<()> {
    let a = Matrix::from_fn(2, 3, |r, c| (r * 3 + c) as i64 + 1);
    let b = Matrix::from_fn(3, 4, |r, c| r as i64 - c as i64);
    let (sa, tb) = (sigma(&a), tau(&b));
    println!("A =\n{a}sigma(A) =\n{sa}B =\n{b}tau(B) =\n{tb}");

    let mut acc = Matrix::zeros(2, 4);
    for k in 0..a.cols() {
        let x = eps(&sa, k, 2, 4)?;
        let y = omega(&tb, k, 2, 4)?;
        let term = x.hadamard(&y, Arithmetic::EXACT)?;
        println!("k = {k}: eps^k(sigma A) . omega^k(tau B) =\n{term}");
        acc = acc.add_checked(&term, Arithmetic::EXACT)?;
    }
    assert_eq!(acc, naive_matmul(&a, &b)?);
    println!("sum =\n{acc}");
    Ok(())
}
