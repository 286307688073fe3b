//! The dual trace S(t) = Σ e^{itλ_j} ψ(λ_j − μ_k) |coeff|² on the sphere
//! pair. Its modulus peaks at t = 0 and climbs back toward the period 2π.

use kuznecov_weyl::coeffs::build_table;
use kuznecov_weyl::kuznecov::{dual_trace, TestFunction};
use kuznecov_weyl::numeric::parse_grid;
use kuznecov_weyl::spectra::ManifoldPair;

fn main() -> kuznecov_weyl::Result<()> {
    let table = build_table(&ManifoldPair::parse("sphere:2:1")?, 40.0)?;
    let psi = TestFunction::parse("fejer:a=1")?;
    let times = parse_grid("lin:-0.5:7:16")?;
    for (t, z) in times.iter().zip(dual_trace(&table, &psi, &times)?) {
        println!("t {t:>7.3}  |trace| {:.6e}", z.norm());
    }
    Ok(())
}
