//! Kuznecov sums on a flat torus pair at the edge c = 1 and in the bulk,
//! with log-log exponent fits against the predicted growth.

use kuznecov_weyl::asymptotics::{fit_growth, predicted_exponent};
use kuznecov_weyl::kuznecov::{kuznecov_sum, TestFunction, TorusShells};
use kuznecov_weyl::numeric::parse_grid;
use kuznecov_weyl::spectra::ManifoldPair;

fn main() -> kuznecov_weyl::Result<()> {
    let pair = ManifoldPair::parse("torus:3:1")?;
    let psi = TestFunction::parse("fejer:a=1")?;
    let grid = parse_grid("dyadic:40:320:6")?;
    let shells = TorusShells::new(&pair, grid[grid.len() - 1] + psi.radius() + 1.0)?;
    for c in [1.0, 0.5] {
        let sums = kuznecov_sum(&shells, c, &psi, &grid)?;
        let fit = fit_growth(&sums, (grid[0], grid[grid.len() - 1]))?;
        println!(
            "c = {c}: exponent {:.4} ± {:.4} (predicted {}), r² {:.6}",
            fit.exponent,
            fit.exponent_stderr,
            predicted_exponent(c, pair.n, pair.d)?,
            fit.r_squared
        );
    }
    Ok(())
}
