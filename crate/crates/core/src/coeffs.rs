//! Squared restriction Fourier coefficients |⟨γ_H φ_j, e_k⟩|² for the model
//! pairs, with a versioned on-disk cache.

use crate::error::{Error, Result};
use crate::spectra::{enumerate_spectrum_with, ManifoldPair, ModeDescriptor, ModeLabel, PairKind, SpectrumSlice, DEFAULT_MODE_BUDGET};
use crate::special::{gauss_legendre, gegenbauer, gegenbauer_norm_sq, orthonormal_gegenbauer_seq};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub const TABLE_SCHEMA_VERSION: u32 = 1;
/// Values below this are stored as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-14;
/// Highest degree whose Parseval row sum is re-checked by quadrature.
pub const PARSEVAL_CHECK_DEGREE: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub j: u32,
    pub k: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub schema_version: u32,
    pub pair: ManifoldPair,
    pub lambda_max: f64,
    pub mu_max: f64,
    pub quadrature_order: usize,
    pub build_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub header: TableHeader,
    pub m_modes: Vec<ModeDescriptor>,
    pub h_modes: Vec<ModeDescriptor>,
    /// Sorted by (j, k); zero entries omitted.
    pub entries: Vec<Entry>,
    /// Largest Parseval row defect found by the quadrature re-check, if run.
    pub parseval_defect: Option<f64>,
}

impl CoefficientTable {
    pub fn pair(&self) -> &ManifoldPair {
        &self.header.pair
    }

    pub fn lambda_max(&self) -> f64 {
        self.header.lambda_max
    }

    /// Σ_k |coeff|² for every M-mode.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m_modes.len()];
        for e in &self.entries {
            out[e.j as usize] += e.value;
        }
        out
    }

    /// A table with the same modes and no nonzero entries.
    pub fn zeroed(&self) -> Self {
        CoefficientTable {
            entries: Vec::new(),
            ..self.clone()
        }
    }
}

fn build_hash(pair: &ManifoldPair, lambda_max: f64, mu_max: f64, order: usize) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(TABLE_SCHEMA_VERSION.to_le_bytes());
    h.update(pair.descriptor().as_bytes());
    h.update(lambda_max.to_bits().to_le_bytes());
    h.update(mu_max.to_bits().to_le_bytes());
    h.update((order as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn header(slice: &SpectrumSlice, order: usize) -> TableHeader {
    TableHeader {
        schema_version: TABLE_SCHEMA_VERSION,
        pair: slice.pair.clone(),
        lambda_max: slice.cutoff,
        mu_max: slice.h_cutoff,
        quadrature_order: order,
        build_hash: build_hash(&slice.pair, slice.cutoff, slice.h_cutoff, order),
    }
}

fn label_index(modes: &[ModeDescriptor]) -> HashMap<&[i64], u32> {
    modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let key: &[i64] = match &m.label {
                ModeLabel::Torus { m } => m,
                ModeLabel::Sphere { gt } => gt,
            };
            (key, i as u32)
        })
        .collect()
}

/// Exponential bases: the only nonzero coefficient of m ∈ Z^n is at k = m_T,
/// with value 1 / Π_{i>d} P_i ((2π)^{−(n−d)} for default periods).
pub fn torus_coefficients(slice: &SpectrumSlice) -> Result<CoefficientTable> {
    let pair = &slice.pair;
    if pair.kind != PairKind::Torus {
        return Err(Error::Invalid("torus_coefficients needs a torus pair".into()));
    }
    let value = 1.0 / pair.torus_periods[pair.d..].iter().product::<f64>();
    let index = label_index(&slice.h_modes);
    let mut entries = Vec::with_capacity(slice.m_modes.len());
    for (j, mode) in slice.m_modes.iter().enumerate() {
        if let ModeLabel::Torus { m } = &mode.label {
            if let Some(&k) = index.get(&m[..pair.d]) {
                entries.push(Entry { j: j as u32, k, value });
            }
        }
    }
    Ok(CoefficientTable {
        header: header(slice, 0),
        m_modes: slice.m_modes.clone(),
        h_modes: slice.h_modes.clone(),
        entries,
        parseval_defect: None,
    })
}

/// Orthonormal Gegenbauer value p_ν^{(α)}(0).
fn gegenbauer_at_zero(nu: usize, alpha: f64, memo: &mut HashMap<(usize, u64), f64>) -> f64 {
    if nu % 2 == 1 {
        return 0.0;
    }
    *memo
        .entry((nu, alpha.to_bits()))
        .or_insert_with(|| orthonormal_gegenbauer_seq(nu, alpha, 0.0)[nu])
}

/// Factor multiplying Y^{(d)}(lower labels) when the ambient harmonic with
/// pattern `gt` is restricted to the equator S^d.
fn restriction_factor(n: usize, d: usize, gt: &[i64], memo: &mut HashMap<(usize, u64), f64>) -> f64 {
    let mut f = 1.0;
    for k in (d + 1)..=n {
        let upper = gt[n - k];
        let lower = gt[n - k + 1].abs();
        let alpha = lower as f64 + (k as f64 - 1.0) / 2.0;
        f *= gegenbauer_at_zero((upper - lower) as usize, alpha, memo);
        if f == 0.0 {
            break;
        }
    }
    f
}

/// Default quadrature order 2·N_max + 8.
pub fn default_quadrature_order(slice: &SpectrumSlice) -> usize {
    let nmax = slice.m_modes.iter().map(|m| m.key.0).max().unwrap_or(0) as usize;
    2 * nmax + 8
}

/// Real Gelfand-Tsetlin harmonics restricted to the equatorial S^d: each
/// ambient harmonic restricts to a multiple of a single S^d harmonic, and the
/// multiple is a product of orthonormal Gegenbauer values at 0. Rows with
/// degree ≤ 40 are re-checked against a product quadrature over S^d built on
/// unnormalized Gegenbauer polynomials.
pub fn sphere_coefficients(slice: &SpectrumSlice, quadrature_order: usize) -> Result<CoefficientTable> {
    let pair = &slice.pair;
    if pair.kind != PairKind::Sphere {
        return Err(Error::Invalid("sphere_coefficients needs a sphere pair".into()));
    }
    let needed = 2 * slice.m_modes.iter().map(|m| m.key.0).max().unwrap_or(0) as usize + 1;
    if quadrature_order < needed {
        return Err(Error::Invalid(format!(
            "quadrature order {quadrature_order} below 2*N_max+1 = {needed}"
        )));
    }
    let (n, d) = (pair.n, pair.d);
    let index = label_index(&slice.h_modes);
    let chunks: Vec<Vec<Entry>> = slice
        .m_modes
        .par_chunks(4096)
        .enumerate()
        .map(|(c, chunk)| {
            let mut memo = HashMap::new();
            let mut out = Vec::new();
            for (i, mode) in chunk.iter().enumerate() {
                let j = (c * 4096 + i) as u32;
                let ModeLabel::Sphere { gt } = &mode.label else { continue };
                let f = restriction_factor(n, d, gt, &mut memo);
                let v = f * f;
                if v < ZERO_FLOOR {
                    continue;
                }
                if let Some(&k) = index.get(&gt[n - d..]) {
                    out.push(Entry { j, k, value: v });
                }
            }
            out
        })
        .collect();
    let entries: Vec<Entry> = chunks.into_iter().flatten().collect();
    let mut table = CoefficientTable {
        header: header(slice, quadrature_order),
        m_modes: slice.m_modes.clone(),
        h_modes: slice.h_modes.clone(),
        entries,
        parseval_defect: None,
    };
    table.parseval_defect = Some(parseval_check(&table, PARSEVAL_CHECK_DEGREE)?);
    if let Some(def) = table.parseval_defect {
        if def > 1e-6 {
            log::warn!("Parseval row defect {def:e} exceeds 1e-6; quadrature under-resolved");
        }
    }
    Ok(table)
}

/// Largest |row sum − ∫_{S^d} |Y|²| over rows of degree ≤ `max_degree`, with the
/// restricted norm computed by product quadrature.
pub fn parseval_check(table: &CoefficientTable, max_degree: u64) -> Result<f64> {
    let pair = table.pair();
    let order = table.header.quadrature_order;
    let rows = table.row_sums();
    // product rules over S^d get expensive quickly; keep d ≥ 3 to low degree
    let cap = if pair.d <= 2 { max_degree } else { max_degree.min(6) };
    let defects: Vec<f64> = table
        .m_modes
        .par_iter()
        .enumerate()
        .filter(|(_, m)| m.key.0 <= cap)
        .map(|(j, m)| {
            let ModeLabel::Sphere { gt } = &m.label else { return Ok(0.0) };
            let norm = restricted_norm_by_quadrature(pair, gt, order)?;
            Ok((rows[j] - norm).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Y_{gt} on S^{dim} at hyperspherical angles (θ_dim, …, θ_2, φ), evaluated
/// with unnormalized Gegenbauer polynomials and closed-form norms.
pub fn harmonic_value(gt: &[i64], angles: &[f64]) -> f64 {
    let dim = gt.len();
    let mut v = 1.0;
    for k in (2..=dim).rev() {
        let upper = gt[dim - k];
        let lower = gt[dim - k + 1].abs();
        let alpha = lower as f64 + (k as f64 - 1.0) / 2.0;
        let nu = (upper - lower) as usize;
        let theta = angles[dim - k];
        v *= theta.sin().powi(lower as i32) * gegenbauer(nu, alpha, theta.cos()) / gegenbauer_norm_sq(nu, alpha).sqrt();
    }
    let l1 = gt[dim - 1];
    let phi = angles[dim - 1];
    v * azimuthal(l1, phi)
}

fn azimuthal(l: i64, phi: f64) -> f64 {
    match l.cmp(&0) {
        std::cmp::Ordering::Equal => 1.0 / (2.0 * PI).sqrt(),
        std::cmp::Ordering::Greater => (l as f64 * phi).cos() / PI.sqrt(),
        std::cmp::Ordering::Less => ((-l) as f64 * phi).sin() / PI.sqrt(),
    }
}

/// Product rule on S^d: Gauss-Legendre in each polar angle (with the
/// sin^{k−1} density folded into the weights), trapezoid in φ.
fn sphere_product_rule(d: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    let rule = gauss_legendre(order);
    let nphi = 2 * order;
    let mut pts: Vec<(Vec<f64>, f64)> = (0..nphi)
        .map(|i| (vec![2.0 * PI * i as f64 / nphi as f64], 2.0 * PI / nphi as f64))
        .collect();
    for k in 2..=d {
        let mut next = Vec::with_capacity(pts.len() * order);
        for (t, w) in rule.mapped(0.0, PI) {
            let wk = w * t.sin().powi(k as i32 - 1);
            for (p, pw) in &pts {
                let mut q = Vec::with_capacity(p.len() + 1);
                q.push(t);
                q.extend_from_slice(p);
                next.push((q, pw * wk));
            }
        }
        pts = next;
    }
    pts
}

fn restricted_angles(n: usize, d: usize, sd: &[f64]) -> Vec<f64> {
    let mut a = vec![PI / 2.0; n - d];
    a.extend_from_slice(sd);
    a
}

/// ∫_{S^d} |Y_{gt}|_{S^d}|² dS by product quadrature.
pub fn restricted_norm_by_quadrature(pair: &ManifoldPair, gt: &[i64], order: usize) -> Result<f64> {
    if pair.kind != PairKind::Sphere || gt.len() != pair.n {
        return Err(Error::Invalid("restricted norm needs a sphere pattern of length n".into()));
    }
    let s: f64 = sphere_product_rule(pair.d, order)
        .iter()
        .map(|(p, w)| {
            let y = harmonic_value(gt, &restricted_angles(pair.n, pair.d, p));
            w * y * y
        })
        .sum();
    Ok(s)
}

/// ⟨Y_{gt}|_{S^d}, e_k⟩² for each H-mode by product quadrature, an
/// independent route to one table row.
pub fn restriction_row_by_quadrature(pair: &ManifoldPair, gt: &[i64], h_modes: &[ModeDescriptor], order: usize) -> Result<Vec<f64>> {
    if pair.kind != PairKind::Sphere || gt.len() != pair.n {
        return Err(Error::Invalid("restriction row needs a sphere pattern of length n".into()));
    }
    let rule = sphere_product_rule(pair.d, order);
    let ys: Vec<f64> = rule
        .iter()
        .map(|(p, _)| harmonic_value(gt, &restricted_angles(pair.n, pair.d, p)))
        .collect();
    Ok(h_modes
        .iter()
        .map(|h| {
            let ModeLabel::Sphere { gt: hg } = &h.label else { return 0.0 };
            let ip: f64 = rule.iter().zip(&ys).map(|((p, w), y)| w * y * harmonic_value(hg, p)).sum();
            ip * ip
        })
        .collect())
}

/// Enumerates the slice and builds the table for either pair kind.
pub fn build_table(pair: &ManifoldPair, lambda_max: f64) -> Result<CoefficientTable> {
    let slice = enumerate_spectrum_with(pair, lambda_max, lambda_max, DEFAULT_MODE_BUDGET)?;
    match pair.kind {
        PairKind::Torus => torus_coefficients(&slice),
        PairKind::Sphere => {
            let order = default_quadrature_order(&slice);
            sphere_coefficients(&slice, order)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Built,
    Rebuilt(String),
}

/// Cache file for a pair; one file per pair, replaced when the key changes.
pub fn cache_path(cache_dir: &Path, pair: &ManifoldPair) -> PathBuf {
    let mut h = Sha256::new();
    h.update(pair.descriptor().as_bytes());
    let tag: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
    cache_dir.join(format!("coeffs-{tag}.json"))
}

/// Returns the cached table when its key matches, otherwise builds,
/// validates, and atomically persists a fresh one.
pub fn load_or_build(pair: &ManifoldPair, lambda_max: f64, cache_dir: &Path) -> Result<(CoefficientTable, CacheOutcome)> {
    let path = cache_path(cache_dir, pair);
    let mut reason = None;
    if path.exists() {
        match std::fs::read_to_string(&path)
            .map_err(Error::from)
            .and_then(|s| serde_json::from_str::<CoefficientTable>(&s).map_err(Error::from))
        {
            Ok(t) => {
                let h = &t.header;
                let key_ok = h.schema_version == TABLE_SCHEMA_VERSION
                    && h.pair == *pair
                    && h.lambda_max == lambda_max
                    && h.build_hash == build_hash(&h.pair, h.lambda_max, h.mu_max, h.quadrature_order);
                if key_ok {
                    return Ok((t, CacheOutcome::Hit));
                }
                reason = Some(if h.schema_version != TABLE_SCHEMA_VERSION {
                    "schema version mismatch".to_string()
                } else {
                    "cache key mismatch".to_string()
                });
            }
            Err(e) => {
                log::warn!("cache file {} unreadable ({e}); rebuilding", path.display());
                reason = Some(format!("corrupted cache: {e}"));
            }
        }
    }
    let table = build_table(pair, lambda_max)?;
    std::fs::create_dir_all(cache_dir)?;
    write_atomic(&path, serde_json::to_string(&table)?.as_bytes())?;
    Ok((
        table,
        match reason {
            Some(r) => CacheOutcome::Rebuilt(r),
            None => CacheOutcome::Built,
        },
    ))
}

/// Write to a sibling temp file, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::enumerate_spectrum;

    #[test]
    fn torus_single_entry_per_mode() {
        let pair = ManifoldPair::torus(3, 2).unwrap();
        let t = build_table(&pair, 6.0).unwrap();
        assert_eq!(t.entries.len(), t.m_modes.len());
        assert!(t.entries.iter().all(|e| e.value == 1.0 / (2.0 * PI)));
    }

    #[test]
    fn sphere_constant_mode() {
        for (n, d) in [(2usize, 1usize), (3, 1), (3, 2), (4, 2)] {
            let pair = ManifoldPair::sphere(n, d).unwrap();
            let t = build_table(&pair, 3.0).unwrap();
            let want = crate::special::sphere_area(d) / crate::special::sphere_area(n);
            let e = t.entries.iter().find(|e| e.j == 0).unwrap();
            assert!((e.value - want).abs() < 1e-13, "({n},{d}) {} vs {want}", e.value);
        }
    }

    #[test]
    fn sphere_rows_match_quadrature_route() {
        for (n, d) in [(2usize, 1usize), (3, 1), (3, 2), (4, 2)] {
            let pair = ManifoldPair::sphere(n, d).unwrap();
            let slice = enumerate_spectrum(&pair, 5.5).unwrap();
            let t = sphere_coefficients(&slice, 24).unwrap();
            for (j, m) in slice.m_modes.iter().enumerate() {
                let ModeLabel::Sphere { gt } = &m.label else { unreachable!() };
                let row = restriction_row_by_quadrature(&pair, gt, &slice.h_modes, 24).unwrap();
                for (k, q) in row.iter().enumerate() {
                    let stored = t
                        .entries
                        .iter()
                        .find(|e| e.j as usize == j && e.k as usize == k)
                        .map_or(0.0, |e| e.value);
                    assert!((stored - q).abs() < 1e-11, "({n},{d}) {} k={k}: {stored} vs {q}", m.label);
                }
            }
            assert!(t.parseval_defect.unwrap() < 1e-11);
        }
    }

    #[test]
    fn quadrature_order_guard() {
        let pair = ManifoldPair::sphere(2, 1).unwrap();
        let slice = enumerate_spectrum(&pair, 10.0).unwrap();
        assert!(sphere_coefficients(&slice, 5).is_err());
    }

    #[test]
    fn cache_hit_rebuild_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let pair = ManifoldPair::sphere(2, 1).unwrap();
        let (a, o1) = load_or_build(&pair, 6.0, dir.path()).unwrap();
        assert_eq!(o1, CacheOutcome::Built);
        let path = cache_path(dir.path(), &pair);
        let bytes = std::fs::read(&path).unwrap();
        let (b, o2) = load_or_build(&pair, 6.0, dir.path()).unwrap();
        assert_eq!(o2, CacheOutcome::Hit);
        assert_eq!(a, b);
        assert_eq!(std::fs::read(&path).unwrap(), bytes);

        let (c, o3) = load_or_build(&pair, 8.0, dir.path()).unwrap();
        assert!(matches!(o3, CacheOutcome::Rebuilt(_)));
        assert!(c.m_modes.len() > a.m_modes.len());
        assert_eq!(load_or_build(&pair, 8.0, dir.path()).unwrap().1, CacheOutcome::Hit);

        std::fs::write(&path, b"{ not json").unwrap();
        let (d, o4) = load_or_build(&pair, 8.0, dir.path()).unwrap();
        assert!(matches!(o4, CacheOutcome::Rebuilt(_)));
        assert_eq!(d, build_table(&pair, 8.0).unwrap());
    }
}
