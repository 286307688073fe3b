//! Exact spectra of the two model pairs: the equatorial S^d ⊂ S^n and the
//! coordinate sub-torus T^d ⊂ T^n.

use crate::error::{Error, Result};
use crate::special::sphere_area;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::PI;

pub const SLICE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MODE_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    Sphere,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalization {
    /// λ = sqrt(N(N+n−1)), the square root of the Laplace eigenvalue.
    LaplaceFrequency,
    /// λ = N + (n−1)/2.
    DegreeShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPair {
    pub kind: PairKind,
    pub n: usize,
    pub d: usize,
    pub normalization: Normalization,
    /// Periods of T^n; the first d belong to T^d. Empty for spheres.
    pub torus_periods: Vec<f64>,
}

impl ManifoldPair {
    pub fn torus(n: usize, d: usize) -> Result<Self> {
        let p = ManifoldPair {
            kind: PairKind::Torus,
            n,
            d,
            normalization: Normalization::LaplaceFrequency,
            torus_periods: vec![2.0 * PI; n],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn sphere(n: usize, d: usize) -> Result<Self> {
        let p = ManifoldPair {
            kind: PairKind::Sphere,
            n,
            d,
            normalization: Normalization::LaplaceFrequency,
            torus_periods: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_periods(mut self, periods: Vec<f64>) -> Result<Self> {
        self.torus_periods = periods;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Invalid(format!("ambient dimension must be >= 2, got {}", self.n)));
        }
        if self.d < 1 || self.d >= self.n {
            return Err(Error::Invalid(format!("need 1 <= d <= n-1, got n={}, d={}", self.n, self.d)));
        }
        if self.kind == PairKind::Torus {
            if self.torus_periods.len() != self.n {
                return Err(Error::Invalid(format!(
                    "torus needs {} periods, got {}",
                    self.n,
                    self.torus_periods.len()
                )));
            }
            if self.torus_periods.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                return Err(Error::Invalid("torus periods must be positive".into()));
            }
        }
        Ok(())
    }

    /// `torus:n:d`, `torus:n:d:p1,...,pn` (periods), `sphere:n:d` or
    /// `sphere:n:d:shift` (degree-shift frequencies).
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').map(str::trim).collect();
        let bad = || Error::Invalid(format!("pair spec '{spec}' is not kind:n:d[:extra]"));
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let n: usize = parts[1].parse().map_err(|_| bad())?;
        let d: usize = parts[2].parse().map_err(|_| bad())?;
        match (parts[0], parts.get(3)) {
            ("torus", None) => ManifoldPair::torus(n, d),
            ("torus", Some(p)) => {
                let periods = p
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<f64>>>()?;
                ManifoldPair::torus(n, d)?.with_periods(periods)
            }
            ("sphere", None) | ("sphere", Some(&"laplace")) => ManifoldPair::sphere(n, d),
            ("sphere", Some(&"shift")) => Ok(ManifoldPair::sphere(n, d)?.with_normalization(Normalization::DegreeShift)),
            _ => Err(bad()),
        }
    }

    /// Short stable text form, e.g. `torus(3,1)` or `sphere(2,1,laplace)`.
    pub fn descriptor(&self) -> String {
        match self.kind {
            PairKind::Torus => {
                if self.equal_periods() && self.torus_periods[0] == 2.0 * PI {
                    format!("torus({},{})", self.n, self.d)
                } else {
                    let p: Vec<String> = self.torus_periods.iter().map(|p| format!("{p:.17e}")).collect();
                    format!("torus({},{};{})", self.n, self.d, p.join(","))
                }
            }
            PairKind::Sphere => {
                let norm = match self.normalization {
                    Normalization::LaplaceFrequency => "laplace",
                    Normalization::DegreeShift => "shift",
                };
                format!("sphere({},{},{norm})", self.n, self.d)
            }
        }
    }

    pub fn equal_periods(&self) -> bool {
        self.torus_periods.windows(2).all(|w| w[0] == w[1])
    }

    /// Riemannian volume of H.
    pub fn h_volume(&self) -> f64 {
        match self.kind {
            PairKind::Torus => self.torus_periods[..self.d].iter().product(),
            PairKind::Sphere => sphere_area(self.d),
        }
    }

    pub fn m_volume(&self) -> f64 {
        match self.kind {
            PairKind::Torus => self.torus_periods.iter().product(),
            PairKind::Sphere => sphere_area(self.n),
        }
    }

    /// Injectivity-radius surrogate bounding admissible supp ψ̂.
    pub fn injectivity_radius(&self) -> f64 {
        match self.kind {
            PairKind::Sphere => PI,
            PairKind::Torus => 0.5 * self.torus_periods.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Frequency of the sphere degree-N eigenspace on S^dim.
    pub fn sphere_frequency(&self, degree: u64, dim: usize) -> f64 {
        let nf = degree as f64;
        match self.normalization {
            Normalization::LaplaceFrequency => (nf * (nf + dim as f64 - 1.0)).sqrt(),
            Normalization::DegreeShift => nf + (dim as f64 - 1.0) / 2.0,
        }
    }

    /// Frequency of a torus lattice vector (first `m.len()` periods).
    pub fn torus_frequency(&self, m: &[i64]) -> f64 {
        if self.equal_periods() {
            let s: i64 = m.iter().map(|x| x * x).sum();
            (s as f64).sqrt() * (2.0 * PI / self.torus_periods[0])
        } else {
            let mut s = 0.0;
            for (x, p) in m.iter().zip(&self.torus_periods) {
                let w = *x as f64 * 2.0 * PI / p;
                s += w * w;
            }
            s.sqrt()
        }
    }

    fn torus_key(&self, m: &[i64]) -> u64 {
        if self.equal_periods() {
            m.iter().map(|x| (x * x) as u64).sum()
        } else {
            // with unequal periods only sign flips are degenerate, and those
            // produce bitwise identical sums of squares
            let mut s = 0.0;
            for (x, p) in m.iter().zip(&self.torus_periods) {
                let w = x.unsigned_abs() as f64 * 2.0 * PI / p;
                s += w * w;
            }
            s.to_bits()
        }
    }
}

/// Exact eigenspace identity: degree N on spheres, |m|² on tori with equal
/// periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EigenKey(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// Gelfand-Tsetlin pattern l_top ≥ … ≥ l_2 ≥ |l_1|, first entry is the degree.
    /// A negative l_1 selects the sine member of the real azimuthal pair.
    Sphere { gt: Vec<i64> },
    Torus { m: Vec<i64> },
}

impl ModeLabel {
    fn entries(&self) -> &[i64] {
        match self {
            ModeLabel::Sphere { gt } => gt,
            ModeLabel::Torus { m } => m,
        }
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (tag, v) = match self {
            ModeLabel::Sphere { gt } => ("Y", gt),
            ModeLabel::Torus { m } => ("m", m),
        };
        let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        write!(f, "{tag}({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDescriptor {
    pub label: ModeLabel,
    pub frequency: f64,
    pub key: EigenKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSlice {
    pub schema_version: u32,
    pub pair: ManifoldPair,
    pub cutoff: f64,
    pub h_cutoff: f64,
    pub m_modes: Vec<ModeDescriptor>,
    pub h_modes: Vec<ModeDescriptor>,
}

impl SpectrumSlice {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let slice: SpectrumSlice = serde_json::from_str(s)?;
        if slice.schema_version != SLICE_SCHEMA_VERSION {
            return Err(Error::Invalid(format!("unsupported slice schema {}", slice.schema_version)));
        }
        Ok(slice)
    }

    /// Distinct M-eigenvalues in increasing order, as (key, frequency, multiplicity).
    pub fn eigenvalues(&self) -> Vec<(EigenKey, f64, usize)> {
        let mut out: Vec<(EigenKey, f64, usize)> = Vec::new();
        for m in &self.m_modes {
            match out.last_mut() {
                Some(last) if last.0 == m.key => last.2 += 1,
                _ => out.push((m.key, m.frequency, 1)),
            }
        }
        out
    }
}

fn mode_order(pair: &ManifoldPair) -> impl Fn(&ModeDescriptor, &ModeDescriptor) -> Ordering + '_ {
    move |a, b| {
        let primary = if pair.kind == PairKind::Torus && !pair.equal_periods() {
            a.frequency.total_cmp(&b.frequency)
        } else {
            a.key.cmp(&b.key)
        };
        primary.then_with(|| a.label.entries().cmp(b.label.entries()))
    }
}

/// Dimension of degree-N spherical harmonics on S^n: C(N+n, n) − C(N+n−2, n).
pub fn harmonic_dimension(n: usize, degree: u64) -> u64 {
    fn binom(a: u64, b: u64) -> u64 {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        let mut r: u128 = 1;
        for i in 0..b {
            r = r * (a - i) as u128 / (i + 1) as u128;
        }
        r as u64
    }
    let n = n as u64;
    binom(degree + n, n) - if degree >= 2 { binom(degree + n - 2, n) } else { 0 }
}

/// Every M-mode with frequency ≤ λ_max and every H-mode with frequency ≤ λ_max.
pub fn enumerate_spectrum(pair: &ManifoldPair, lambda_max: f64) -> Result<SpectrumSlice> {
    enumerate_spectrum_with(pair, lambda_max, lambda_max, DEFAULT_MODE_BUDGET)
}

/// As [`enumerate_spectrum`] with a separate H cutoff and an explicit mode budget.
pub fn enumerate_spectrum_with(pair: &ManifoldPair, lambda_max: f64, mu_max: f64, budget: u64) -> Result<SpectrumSlice> {
    pair.validate()?;
    if !(lambda_max > 0.0 && lambda_max.is_finite()) || !(mu_max >= 0.0 && mu_max.is_finite()) {
        return Err(Error::Invalid(format!("cutoffs must be positive and finite, got {lambda_max}, {mu_max}")));
    }
    let (m_modes, h_modes) = match pair.kind {
        PairKind::Torus => (
            torus_modes(pair, pair.n, lambda_max, budget)?,
            torus_modes(pair, pair.d, mu_max, budget)?,
        ),
        PairKind::Sphere => (
            sphere_modes(pair, pair.n, lambda_max, budget)?,
            sphere_modes(pair, pair.d, mu_max, budget)?,
        ),
    };
    Ok(SpectrumSlice {
        schema_version: SLICE_SCHEMA_VERSION,
        pair: pair.clone(),
        cutoff: lambda_max,
        h_cutoff: mu_max,
        m_modes,
        h_modes,
    })
}

fn torus_modes(pair: &ManifoldPair, dim: usize, cutoff: f64, budget: u64) -> Result<Vec<ModeDescriptor>> {
    let bounds: Vec<i64> = pair.torus_periods[..dim]
        .iter()
        .map(|p| (cutoff * p / (2.0 * PI)).floor() as i64)
        .collect();
    // volume estimate of the ellipsoid before committing memory
    let ball = PI.powf(dim as f64 / 2.0) / crate::special::gamma(dim as f64 / 2.0 + 1.0);
    let est = ball * pair.torus_periods[..dim].iter().map(|p| cutoff * p / (2.0 * PI)).product::<f64>();
    if est > 1.2 * budget as f64 + 100.0 {
        return Err(Error::Budget {
            what: "torus modes",
            needed: est as u64,
            budget,
        });
    }
    let mut out = Vec::new();
    let mut m = vec![0i64; dim];
    fn rec(
        pair: &ManifoldPair,
        i: usize,
        m: &mut Vec<i64>,
        bounds: &[i64],
        cutoff: f64,
        out: &mut Vec<ModeDescriptor>,
        budget: u64,
    ) -> Result<()> {
        if i == m.len() {
            let f = pair.torus_frequency(m);
            if f <= cutoff {
                if out.len() as u64 >= budget {
                    return Err(Error::Budget {
                        what: "torus modes",
                        needed: out.len() as u64 + 1,
                        budget,
                    });
                }
                out.push(ModeDescriptor {
                    label: ModeLabel::Torus { m: m.clone() },
                    frequency: f,
                    key: EigenKey(pair.torus_key(m)),
                });
            }
            return Ok(());
        }
        for v in -bounds[i]..=bounds[i] {
            m[i] = v;
            // prune on the partial norm
            if pair.torus_frequency(&m[..=i]) > cutoff {
                continue;
            }
            rec(pair, i + 1, m, bounds, cutoff, out, budget)?;
        }
        m[i] = 0;
        Ok(())
    }
    rec(pair, 0, &mut m, &bounds, cutoff, &mut out, budget)?;
    out.sort_by(mode_order(pair));
    Ok(out)
}

fn sphere_modes(pair: &ManifoldPair, dim: usize, cutoff: f64, budget: u64) -> Result<Vec<ModeDescriptor>> {
    let mut degrees = Vec::new();
    let mut total: u64 = 0;
    let mut deg = 0u64;
    while pair.sphere_frequency(deg, dim) <= cutoff {
        total += harmonic_dimension(dim, deg);
        degrees.push(deg);
        deg += 1;
    }
    if total > budget {
        return Err(Error::Budget {
            what: "sphere modes",
            needed: total,
            budget,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    for &deg in &degrees {
        let freq = pair.sphere_frequency(deg, dim);
        let mut gt = vec![0i64; dim];
        gt[0] = deg as i64;
        gt_patterns(&mut gt, 1, &mut |g| {
            out.push(ModeDescriptor {
                label: ModeLabel::Sphere { gt: g.to_vec() },
                frequency: freq,
                key: EigenKey(deg),
            })
        });
    }
    out.sort_by(mode_order(pair));
    Ok(out)
}

/// Visits every pattern gt[0] ≥ gt[1] ≥ … ≥ gt[last−1] ≥ |gt[last]|.
pub(crate) fn gt_patterns(gt: &mut Vec<i64>, i: usize, f: &mut dyn FnMut(&[i64])) {
    let len = gt.len();
    if len == 1 {
        // S^1: single signed label; gt[0] holds |l| and sign is carried below
        let l = gt[0];
        if l == 0 {
            f(&[0]);
        } else {
            f(&[-l]);
            f(&[l]);
        }
        return;
    }
    if i == len {
        f(gt);
        return;
    }
    let upper = gt[i - 1];
    if i == len - 1 {
        for v in -upper..=upper {
            gt[i] = v;
            f(gt);
        }
        gt[i] = 0;
        return;
    }
    for v in 0..=upper {
        gt[i] = v;
        gt_patterns(gt, i + 1, f);
    }
    gt[i] = 0;
}

/// Sorted multiset {c λ_j − μ_k} over all mode pairs of the slice.
pub fn difference_spectrum(slice: &SpectrumSlice, c: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Invalid(format!("c must lie in [0, 1], got {c}")));
    }
    let total = slice.m_modes.len() as u64 * slice.h_modes.len() as u64;
    if total > 10 * DEFAULT_MODE_BUDGET {
        return Err(Error::Budget {
            what: "difference spectrum entries",
            needed: total,
            budget: 10 * DEFAULT_MODE_BUDGET,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    for m in &slice.m_modes {
        for h in &slice.h_modes {
            out.push(c * m.frequency - h.frequency);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_small_slice() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let s = enumerate_spectrum(&pair, 1.5).unwrap();
        assert_eq!(s.m_modes.len(), 9);
        assert_eq!(s.h_modes.len(), 3);
        assert_eq!(s.m_modes[0].label, ModeLabel::Torus { m: vec![0, 0] });
        let diffs = difference_spectrum(&s, 1.0).unwrap();
        assert!(diffs.contains(&0.0));
        assert!(diffs.contains(&1.0));
    }

    #[test]
    fn pair_specs() {
        assert_eq!(ManifoldPair::parse("torus:3:1").unwrap(), ManifoldPair::torus(3, 1).unwrap());
        let s = ManifoldPair::parse("sphere:2:1:shift").unwrap();
        assert_eq!(s.normalization, Normalization::DegreeShift);
        let t = ManifoldPair::parse("torus:2:1:6,5").unwrap();
        assert_eq!(t.torus_periods, vec![6.0, 5.0]);
        for bad in ["torus:3", "cube:3:1", "torus:3:3", "torus:2:1:6", "sphere:2:1:odd"] {
            assert!(ManifoldPair::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sphere_small_slices() {
        let pair = ManifoldPair::sphere(2, 1).unwrap();
        assert_eq!(enumerate_spectrum(&pair, 0.5).unwrap().m_modes.len(), 1);
        let s = enumerate_spectrum(&pair, 2.9).unwrap();
        assert_eq!(s.m_modes.len(), 9);
        assert_eq!(s.eigenvalues().iter().map(|e| e.2).collect::<Vec<_>>(), vec![1, 3, 5]);
    }

    #[test]
    fn harmonic_dimensions() {
        assert_eq!(harmonic_dimension(2, 5), 11);
        assert_eq!(harmonic_dimension(3, 2), 9);
        assert_eq!(harmonic_dimension(1, 3), 2);
        assert_eq!(harmonic_dimension(1, 0), 1);
        for n in 2..=5 {
            let pair = ManifoldPair::sphere(n, 1).unwrap();
            let s = enumerate_spectrum(&pair, pair.sphere_frequency(30, n) + 1e-9).unwrap();
            for (key, _, mult) in s.eigenvalues() {
                assert_eq!(mult as u64, harmonic_dimension(n, key.0), "n={n} N={}", key.0);
            }
        }
    }

    #[test]
    fn validation_and_budget() {
        assert!(ManifoldPair::torus(2, 2).is_err());
        assert!(ManifoldPair::sphere(1, 0).is_err());
        let pair = ManifoldPair::torus(3, 1).unwrap();
        assert!(matches!(
            enumerate_spectrum_with(&pair, 800.0, 800.0, DEFAULT_MODE_BUDGET),
            Err(Error::Budget { .. })
        ));
        assert!(enumerate_spectrum(&pair, -1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let pair = ManifoldPair::sphere(3, 2).unwrap();
        let s = enumerate_spectrum(&pair, 4.0).unwrap();
        let back = SpectrumSlice::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
