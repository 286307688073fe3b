//! Build the restriction coefficient table for the equatorial circle in S^2,
//! cache it, and check it against Parseval.

use kuznecov_weyl::coeffs::{load_or_build, parseval_check, PARSEVAL_CHECK_DEGREE};
use kuznecov_weyl::spectra::ManifoldPair;

fn main() -> kuznecov_weyl::Result<()> {
    let cache = tempfile::tempdir()?;
    let pair = ManifoldPair::parse("sphere:2:1")?;
    let (table, first) = load_or_build(&pair, 40.0, cache.path())?;
    let (_, second) = load_or_build(&pair, 40.0, cache.path())?;
    println!("first load {first:?}, second load {second:?}");
    println!("{} entries over {} modes", table.entries.len(), table.m_modes.len());
    println!("parseval defect {:e}", parseval_check(&table, PARSEVAL_CHECK_DEGREE)?);
    for e in table.entries.iter().filter(|e| e.value > 0.0).take(8) {
        println!("  {:?} -> {:?}: {:.12}", table.m_modes[e.j as usize].label, table.h_modes[e.k as usize].label, e.value);
    }
    Ok(())
}
