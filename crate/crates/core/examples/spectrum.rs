//! Enumerate the joint spectrum of a torus pair and compare the mode count
//! with the Weyl law.

use kuznecov_weyl::special::gamma;
use kuznecov_weyl::spectra::{enumerate_spectrum, ManifoldPair};
use std::f64::consts::PI;

fn main() -> kuznecov_weyl::Result<()> {
    let pair = ManifoldPair::parse("torus:3:1")?;
    let lambda = 30.0;
    let s = enumerate_spectrum(&pair, lambda)?;
    let weyl = PI.powf(1.5) / gamma(2.5) * lambda.powi(3);
    println!("{}: {} modes of M, {} of H", pair.descriptor(), s.m_modes.len(), s.h_modes.len());
    println!("Weyl prediction {weyl:.0}, ratio {:.4}", s.m_modes.len() as f64 / weyl);
    for (key, freq, mult) in s.eigenvalues().into_iter().take(6) {
        println!("  {key:?}  frequency {freq:.6}  multiplicity {mult}");
    }
    Ok(())
}
