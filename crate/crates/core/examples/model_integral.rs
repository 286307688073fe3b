//! The blow-down model integral over a λ ladder, and the stationary-phase
//! error decay for a profile supported away from zero.

use kuznecov_weyl::kuznecov::{ShiftedBump, TestFunction};
use kuznecov_weyl::numeric::parse_grid;
use kuznecov_weyl::oscillatory::{decay_slope, model_integral_ladder, ModelCutoff};

fn main() -> kuznecov_weyl::Result<()> {
    let cutoff = ModelCutoff::default();
    let psi = TestFunction::parse("bump:a=1")?;
    let grid = parse_grid("20:200:6")?;
    let ladder = model_integral_ladder(3, 1, &grid, &cutoff, &psi)?;
    for v in &ladder {
        println!("λ {:>7.2}  |I| {:.6e}  quadrature gap {:.1e}", v.lambda, v.value.norm(), v.error);
    }
    let mags: Vec<f64> = ladder.iter().map(|v| v.value.norm()).collect();
    println!("raw decay slope {:.4}", decay_slope(&grid, &mags)?.0);

    let shifted = ShiftedBump::new(0.2, 0.9)?;
    let grid = parse_grid("200:800:4")?;
    let mags: Vec<f64> = model_integral_ladder(4, 2, &grid, &cutoff, &shifted)?.iter().map(|v| v.value.norm()).collect();
    println!("(4,2) shifted bump slope {:.4}", decay_slope(&grid, &mags)?.0);
    Ok(())
}
