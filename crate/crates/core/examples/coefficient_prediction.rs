//! Predicted leading coefficients for flat and round pairs, and the ratio
//! between two test functions that the fitted sums should reproduce.

use kuznecov_weyl::asymptotics::{flat_leading_coefficient, sphere_leading_coefficient};
use kuznecov_weyl::kuznecov::TestFunction;

fn main() -> kuznecov_weyl::Result<()> {
    let fejer = TestFunction::fejer(1.0)?;
    let bump = TestFunction::bump_square(1.0)?;
    for (n, d) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
        let f = flat_leading_coefficient(n, d, &fejer)?;
        let b = flat_leading_coefficient(n, d, &bump)?;
        let s = sphere_leading_coefficient(n, d, &fejer)?;
        println!(
            "({n},{d}) flat {:.10} sphere {:.10} fejer/bump {:.6}",
            f.phase_normalized().re,
            s.phase_normalized().re,
            f.value.norm() / b.value.norm()
        );
    }
    Ok(())
}
