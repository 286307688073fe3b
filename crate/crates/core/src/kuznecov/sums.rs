//! The spectral sums: ladder sums N^c, jumps, the doubly-smoothed sum and
//! the dual trace, all reduced chunk by chunk in a fixed order.

use super::source::{Atom, SpectralSource, Window};
use super::test_function::TestFunction;
use crate::error::{Error, Result};
use crate::numeric::{fmt17, Neumaier};
use crate::spectra::{EigenKey, ManifoldPair};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    SmoothSharp,
    SharpSharp,
    DoublySmoothed,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumMeta {
    pub pair: Option<ManifoldPair>,
    pub c: f64,
    pub test: String,
    pub rho: Option<String>,
    pub variant: Variant,
    pub build_hash: String,
    /// Estimated contribution missing beyond the cached spectrum, per grid point.
    pub tail_bound: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumTable {
    pub meta: SumMeta,
    pub lambda_grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SumTable {
    /// A table not tied to any spectrum, e.g. for fitting tests.
    pub fn synthetic(lambda_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambda_grid.len() != values.len() {
            return Err(Error::Invalid("grid and values differ in length".into()));
        }
        check_grid(&lambda_grid)?;
        Ok(SumTable {
            meta: SumMeta {
                pair: None,
                c: 1.0,
                test: "synthetic".into(),
                rho: None,
                variant: Variant::SharpSharp,
                build_hash: String::new(),
                tail_bound: None,
            },
            lambda_grid,
            values,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,value\n");
        for (l, v) in self.lambda_grid.iter().zip(&self.values) {
            s.push_str(&format!("{},{}\n", fmt17(*l), fmt17(*v)));
        }
        s
    }

    /// Writes `<stem>.csv` and the `<stem>.json` metadata sidecar.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::File::create(&csv)?.write_all(self.to_csv().as_bytes())?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(csv)
    }

    /// Reads a CSV written by [`SumTable::write`]; the sidecar is optional.
    pub fn read(csv: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(csv)?;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("lambda")) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |p: Option<&str>| -> Result<f64> {
                p.and_then(|v| v.trim().parse().ok()).ok_or_else(|| Error::Config {
                    file: csv.display().to_string(),
                    line: i + 1,
                    msg: format!("expected two numbers, got '{line}'"),
                })
            };
            grid.push(parse(parts.next())?);
            values.push(parse(parts.next())?);
        }
        let mut table = SumTable::synthetic(grid, values)?;
        let sidecar = csv.with_extension("json");
        if sidecar.exists() {
            table.meta = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        }
        Ok(table)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty lambda grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("lambda grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Invalid(format!("c must lie in [0, 1], got {c}")));
    }
    Ok(())
}

/// The grid must stay a safety margin (the window radius) below the cap.
fn check_safe(src: &dyn SpectralSource, grid: &[f64], margin: f64) -> Result<()> {
    let safe = src.lambda_cap() - margin;
    let top = *grid.last().expect("nonempty grid");
    if top > safe {
        return Err(Error::Truncation { requested: top, safe });
    }
    Ok(())
}

fn hash_of(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().take(16).map(|b| format!("{b:02x}")).collect()
}

fn grid_bytes(grid: &[f64]) -> Vec<u8> {
    grid.iter().flat_map(|x| x.to_bits().to_le_bytes()).collect()
}

/// Visits every chunk in parallel and returns the per-chunk results in order.
fn per_chunk<T: Send, F>(src: &dyn SpectralSource, lambda_max: f64, window: Window, init: impl Fn() -> T + Sync, fold: F) -> Vec<T>
where
    F: Fn(&mut T, Atom) + Sync,
{
    (0..src.chunk_count())
        .into_par_iter()
        .map(|chunk| {
            let mut acc = init();
            src.visit_chunk(chunk, lambda_max, window, &mut |a| fold(&mut acc, a));
            acc
        })
        .collect()
}

/// N^c_ψ(λ) = Σ_{λ_j ≤ λ} Σ_k ψ(cλ_j − μ_k) |coeff|² on the grid.
pub fn kuznecov_sum(src: &dyn SpectralSource, c: f64, psi: &TestFunction, grid: &[f64]) -> Result<SumTable> {
    check_c(c)?;
    check_grid(grid)?;
    check_safe(src, grid, psi.radius())?;
    let top = *grid.last().unwrap();
    let window = Window::for_reach(c, psi.reach());
    let parts = per_chunk(
        src,
        top,
        window,
        || vec![Neumaier::default(); grid.len()],
        |bins, a| {
            let v = a.weight * psi.eval(c * a.lambda - a.mu);
            if v != 0.0 {
                let g = grid.partition_point(|x| *x < a.lambda);
                if g < bins.len() {
                    bins[g].add(v);
                }
            }
        },
    );
    let mut bins = vec![Neumaier::default(); grid.len()];
    for part in &parts {
        for (b, p) in bins.iter_mut().zip(part) {
            b.merge(p);
        }
    }
    let mut running = Neumaier::default();
    let values = bins
        .iter()
        .map(|b| {
            running.merge(b);
            running.value()
        })
        .collect();
    let variant = if psi.is_smooth() { Variant::SmoothSharp } else { Variant::SharpSharp };
    let desc = psi.descriptor();
    Ok(SumTable {
        meta: SumMeta {
            pair: Some(src.pair().clone()),
            c,
            test: desc.clone(),
            rho: None,
            variant,
            build_hash: hash_of(&[
                src.pair().descriptor().as_bytes(),
                &c.to_bits().to_le_bytes(),
                desc.as_bytes(),
                &grid_bytes(grid),
            ]),
            tail_bound: None,
        },
        lambda_grid: grid.to_vec(),
        values,
    })
}

/// N^c_ε(λ): the window |cλ_j − μ_k| ≤ ε.
pub fn sharp_sum(src: &dyn SpectralSource, c: f64, eps: f64, grid: &[f64]) -> Result<SumTable> {
    kuznecov_sum(src, c, &TestFunction::sharp(eps)?, grid)
}

/// Mean of the sharp sums at ε − δ, ε, ε + δ; damps lattice oscillation in ε.
pub fn sharp_sum_averaged(src: &dyn SpectralSource, c: f64, eps: f64, jitter: f64, grid: &[f64]) -> Result<SumTable> {
    if !(jitter >= 0.0 && jitter < eps) {
        return Err(Error::Invalid(format!("jitter must lie in [0, eps), got {jitter}")));
    }
    let mut out = sharp_sum(src, c, eps + jitter, grid)?;
    let mid = sharp_sum(src, c, eps, grid)?;
    let low = sharp_sum(src, c, eps - jitter, grid)?;
    for ((v, m), l) in out.values.iter_mut().zip(&mid.values).zip(&low.values) {
        *v = (*v + m + l) / 3.0;
    }
    out.meta.test = format!("sharp:eps={eps},jitter={jitter}");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEntry {
    pub key: EigenKey,
    pub lambda: f64,
    pub value: f64,
}

/// Σ over each eigenspace of Σ_k ψ(cλ_j − μ_k) |coeff|², for every
/// eigenvalue ≤ lambda_max carrying a nonzero total, in increasing λ.
pub fn eigen_weights(src: &dyn SpectralSource, c: f64, psi: &TestFunction, lambda_max: f64) -> Result<Vec<JumpEntry>> {
    check_c(c)?;
    let window = Window::for_reach(c, psi.reach());
    let parts = per_chunk(
        src,
        lambda_max,
        window,
        BTreeMap::<EigenKey, (f64, Neumaier)>::new,
        |map, a| {
            let v = a.weight * psi.eval(c * a.lambda - a.mu);
            if v != 0.0 {
                map.entry(a.key).or_insert((a.lambda, Neumaier::default())).1.add(v);
            }
        },
    );
    let mut all = BTreeMap::<EigenKey, (f64, Neumaier)>::new();
    for part in &parts {
        for (k, (l, s)) in part {
            all.entry(*k).or_insert((*l, Neumaier::default())).1.merge(s);
        }
    }
    let mut out: Vec<JumpEntry> = all
        .into_iter()
        .map(|(key, (lambda, s))| JumpEntry {
            key,
            lambda,
            value: s.value(),
        })
        .collect();
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.key.cmp(&b.key)));
    Ok(out)
}

/// J¹(λ_j) for the eigenvalue labelled `key`.
pub fn jump(src: &dyn SpectralSource, psi: &TestFunction, key: EigenKey) -> Result<f64> {
    if !src.has_eigenvalue(key) {
        return Err(Error::NotInSpectrum(format!("{key:?}")));
    }
    let window = Window::for_reach(1.0, psi.reach());
    let parts = per_chunk(src, src.lambda_cap(), window, Neumaier::default, |acc, a| {
        if a.key == key {
            acc.add(a.weight * psi.eval(a.lambda - a.mu));
        }
    });
    let mut total = Neumaier::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.value())
}

/// Every nonzero jump J¹ with λ_j in [lo, hi].
pub fn jumps(src: &dyn SpectralSource, psi: &TestFunction, lo: f64, hi: f64) -> Result<Vec<JumpEntry>> {
    if hi > src.lambda_cap() {
        return Err(Error::Truncation {
            requested: hi,
            safe: src.lambda_cap(),
        });
    }
    Ok(eigen_weights(src, 1.0, psi, hi)?.into_iter().filter(|j| j.lambda >= lo).collect())
}

/// N¹_{ψ,ρ}(λ) = Σ_{j,k} ρ(λ − λ_j) ψ(λ_j − μ_k) |coeff|² over all cached modes.
pub fn doubly_smoothed_sum(src: &dyn SpectralSource, psi: &TestFunction, rho: &TestFunction, grid: &[f64]) -> Result<SumTable> {
    if !rho.is_smooth() {
        return Err(Error::Invalid("the outer test function must be smooth".into()));
    }
    check_grid(grid)?;
    let cap = src.lambda_cap();
    let weights = eigen_weights(src, 1.0, psi, cap)?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&l| {
            let mut s = Neumaier::default();
            for w in &weights {
                s.add(rho.eval(l - w.lambda) * w.value);
            }
            s.value()
        })
        .collect();
    // density of eigen-weight near the cap, extended with the expected growth
    let pair = src.pair();
    let growth = (pair.n + pair.d) as f64 / 2.0 - 1.0;
    let density: f64 = weights.iter().filter(|w| w.lambda > cap - 2.0).map(|w| w.value).sum::<f64>() / 2.0;
    let tail: Vec<f64> = grid.iter().map(|&l| tail_estimate(rho, density, growth, cap, l)).collect();
    for (i, (v, t)) in values.iter().zip(&tail).enumerate() {
        if *t > 1e-9 * v.abs() {
            log::warn!("doubly smoothed sum at λ = {}: tail bound {t:e} exceeds 1e-9 of {v:e}", grid[i]);
        }
    }
    let desc = psi.descriptor();
    let rdesc = rho.descriptor();
    Ok(SumTable {
        meta: SumMeta {
            pair: Some(pair.clone()),
            c: 1.0,
            test: desc.clone(),
            rho: Some(rdesc.clone()),
            variant: Variant::DoublySmoothed,
            build_hash: hash_of(&[pair.descriptor().as_bytes(), desc.as_bytes(), rdesc.as_bytes(), &grid_bytes(grid)]),
            tail_bound: Some(tail),
        },
        lambda_grid: grid.to_vec(),
        values,
    })
}

/// ∫_cap^∞ D (x/cap)^p |ρ(λ − x)| dx, numerically over ρ's reach.
fn tail_estimate(rho: &TestFunction, density: f64, p: f64, cap: f64, l: f64) -> f64 {
    if density == 0.0 {
        return 0.0;
    }
    let reach = rho.reach();
    let span = if reach.is_finite() { reach + (l - cap).max(0.0) } else { 2000.0 / rho.radius() };
    let h = 0.05_f64.min(0.25 / rho.radius());
    let steps = (span / h).ceil() as usize;
    let mut s = 0.0;
    for i in 0..steps {
        let x = cap + (i as f64 + 0.5) * h;
        s += (x / cap).powf(p) * rho.eval(l - x).abs() * h;
    }
    if !reach.is_finite() {
        // Fejér-type remainder ∝ x^{p−2}
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let x = cap + span;
        s += rho.amplitude() * 2.0 / (std::f64::consts::PI * rho.radius()) * (x / cap).powf(p) / (x - l).max(1.0) / (1.0 - p);
    }
    density * s
}

/// S(t, ψ) = Σ_{j,k} e^{itλ_j} ψ(λ_j − μ_k) |coeff|².
pub fn dual_trace(src: &dyn SpectralSource, psi: &TestFunction, t_grid: &[f64]) -> Result<Vec<Complex64>> {
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("t grid must be finite".into()));
    }
    let weights = eigen_weights(src, 1.0, psi, src.lambda_cap())?;
    Ok(t_grid
        .par_iter()
        .map(|&t| {
            let mut re = Neumaier::default();
            let mut im = Neumaier::default();
            for w in &weights {
                let (s, c) = (t * w.lambda).sin_cos();
                re.add(w.value * c);
                im.add(w.value * s);
            }
            Complex64::new(re.value(), im.value())
        })
        .collect())
}

/// Share of N¹_ψ(λ) coming from pairs with μ_k > λ_j + 10a.
pub fn support_tail_fraction(src: &dyn SpectralSource, psi: &TestFunction, lambda: f64) -> Result<f64> {
    check_safe(src, &[lambda], psi.radius())?;
    let cut = 10.0 * psi.radius();
    let parts = per_chunk(
        src,
        lambda,
        Window::All,
        || (Neumaier::default(), Neumaier::default()),
        |acc, a| {
            let v = a.weight * psi.eval(a.lambda - a.mu);
            acc.0.add(v);
            if a.mu > a.lambda + cut {
                acc.1.add(v);
            }
        },
    );
    let mut total = Neumaier::default();
    let mut tail = Neumaier::default();
    for (t, f) in &parts {
        total.merge(t);
        tail.merge(f);
    }
    if total.value() == 0.0 {
        return Ok(0.0);
    }
    Ok(tail.value().abs() / total.value().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::build_table;
    use crate::kuznecov::source::TorusShells;
    use std::f64::consts::PI;

    fn lattice_sharp(lambda: f64, eps: f64) -> f64 {
        let r = lambda.floor() as i64;
        let mut count = 0u64;
        for x in -r..=r {
            for y in -r..=r {
                let l = ((x * x + y * y) as f64).sqrt();
                if l <= lambda && (l - x.abs() as f64).abs() <= eps {
                    count += 1;
                }
            }
        }
        count as f64 / (2.0 * PI)
    }

    #[test]
    fn torus_sharp_sum_matches_lattice_count() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let shells = TorusShells::new(&pair, 31.0).unwrap();
        let s = sharp_sum(&shells, 1.0, 0.5, &[10.0, 30.0]).unwrap();
        assert!((s.values[1] - lattice_sharp(30.0, 0.5)).abs() < 1e-10);
        assert!((s.values[0] - lattice_sharp(10.0, 0.5)).abs() < 1e-10);
        let table = build_table(&pair, 31.0).unwrap();
        let t = sharp_sum(&table, 1.0, 0.5, &[10.0, 30.0]).unwrap();
        assert!((t.values[1] - s.values[1]).abs() < 1e-10);
    }

    #[test]
    fn smooth_sum_matches_double_loop() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let table = build_table(&pair, 20.0).unwrap();
        let psi = TestFunction::fejer(1.0).unwrap();
        let s = kuznecov_sum(&table, 1.0, &psi, &[15.0]).unwrap();
        let mut want = 0.0;
        for x in -15i64..=15 {
            for y in -15i64..=15 {
                let l = ((x * x + y * y) as f64).sqrt();
                if l <= 15.0 {
                    want += psi.eval(l - x.abs() as f64) / (2.0 * PI);
                }
            }
        }
        assert!((s.values[0] - want).abs() < 1e-12 * want);
        // below the first positive eigenvalue only the zero mode counts
        let z = kuznecov_sum(&table, 1.0, &psi, &[0.5]).unwrap();
        assert!((z.values[0] - psi.eval(0.0) / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn grid_guards() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let shells = TorusShells::new(&pair, 10.0).unwrap();
        assert!(matches!(sharp_sum(&shells, 1.0, 0.5, &[5.0, 9.8]), Err(Error::Truncation { .. })));
        assert!(sharp_sum(&shells, 1.2, 0.5, &[5.0]).is_err());
        assert!(sharp_sum(&shells, 1.0, 0.5, &[5.0, 4.0]).is_err());
    }

    #[test]
    fn jump_at_five() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let shells = TorusShells::new(&pair, 10.0).unwrap();
        let psi = TestFunction::sharp(0.5).unwrap();
        let j = jump(&shells, &psi, EigenKey(25)).unwrap();
        let mut count = 0;
        for x in -5i64..=5 {
            for y in -5i64..=5 {
                if x * x + y * y == 25 && 5.0 - x.abs() as f64 <= 0.5 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 2);
        assert!((j - count as f64 / (2.0 * PI)).abs() < 1e-14);
        assert!(matches!(jump(&shells, &psi, EigenKey(3)), Err(Error::NotInSpectrum(_))));
        let n = sharp_sum(&shells, 1.0, 0.5, &[5.0 - 1e-9, 5.0]).unwrap();
        assert!((n.values[1] - n.values[0] - j).abs() < 1e-12);
    }

    #[test]
    fn dual_trace_bounds() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let shells = TorusShells::new(&pair, 40.0).unwrap();
        let psi = TestFunction::fejer(1.0).unwrap();
        let ts: Vec<f64> = (0..=80).map(|i| i as f64 * 0.1).collect();
        let s = dual_trace(&shells, &psi, &ts).unwrap();
        let all = eigen_weights(&shells, 1.0, &psi, 40.0).unwrap();
        let total: f64 = all.iter().map(|w| w.value).sum();
        assert!((s[0].re - total).abs() < 1e-10 * total);
        assert!(s.iter().all(|z| z.norm() <= s[0].re * (1.0 + 1e-12)));
    }

    #[test]
    fn zero_table_gives_zero() {
        let pair = ManifoldPair::sphere(2, 1).unwrap();
        let table = build_table(&pair, 10.0).unwrap().zeroed();
        let psi = TestFunction::fejer(1.0).unwrap();
        let rho = TestFunction::bump_square(1.0).unwrap();
        let d = doubly_smoothed_sum(&table, &psi, &rho, &[3.0, 5.0]).unwrap();
        assert_eq!(d.values, vec![0.0, 0.0]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let shells = TorusShells::new(&pair, 12.0).unwrap();
        let s = sharp_sum(&shells, 1.0, 0.5, &[2.0, 5.0, 11.0]).unwrap();
        let path = s.write(dir.path(), "n").unwrap();
        let back = SumTable::read(&path).unwrap();
        assert_eq!(back, s);
    }
}
