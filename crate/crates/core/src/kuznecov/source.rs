//! Streams of weighted (λ_j, μ_k) atoms feeding every spectral sum.
//!
//! A source is split into a fixed number of chunks independent of the thread
//! pool, so per-chunk partial sums can be reduced in a fixed order.

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::spectra::{EigenKey, ManifoldPair, PairKind};
use std::f64::consts::PI;

/// One M-mode (or M-eigenspace shell) paired with one H-eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub key: EigenKey,
    pub lambda: f64,
    pub mu: f64,
    /// Squared coefficient, summed over every mode pair the atom stands for.
    pub weight: f64,
}

/// Optional pruning hint; sources may ignore it, consumers filter exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    All,
    /// Only atoms with |c λ − μ| ≤ half_width are wanted.
    Near { c: f64, half_width: f64 },
}

impl Window {
    pub fn for_reach(c: f64, reach: f64) -> Window {
        if reach.is_finite() {
            Window::Near { c, half_width: reach }
        } else {
            Window::All
        }
    }
}

pub trait SpectralSource: Sync {
    fn pair(&self) -> &ManifoldPair;
    /// Every M-mode with λ ≤ this value is represented.
    fn lambda_cap(&self) -> f64;
    /// Every H-mode with μ ≤ this value is represented.
    fn mu_cap(&self) -> f64;
    fn chunk_count(&self) -> usize;
    /// Calls `f` for each atom of the chunk with λ ≤ lambda_max.
    fn visit_chunk(&self, chunk: usize, lambda_max: f64, window: Window, f: &mut dyn FnMut(Atom));
    /// Whether `key` labels an M-eigenvalue within the cap.
    fn has_eigenvalue(&self, key: EigenKey) -> bool;
}

const TABLE_CHUNK: usize = 4096;

impl SpectralSource for CoefficientTable {
    fn pair(&self) -> &ManifoldPair {
        CoefficientTable::pair(self)
    }

    fn lambda_cap(&self) -> f64 {
        self.header.lambda_max
    }

    fn mu_cap(&self) -> f64 {
        self.header.mu_max
    }

    fn chunk_count(&self) -> usize {
        self.m_modes.len().div_ceil(TABLE_CHUNK).max(1)
    }

    fn visit_chunk(&self, chunk: usize, lambda_max: f64, _window: Window, f: &mut dyn FnMut(Atom)) {
        let j0 = (chunk * TABLE_CHUNK) as u32;
        let j1 = ((chunk + 1) * TABLE_CHUNK) as u32;
        let start = self.entries.partition_point(|e| e.j < j0);
        for e in self.entries[start..].iter().take_while(|e| e.j < j1) {
            let m = &self.m_modes[e.j as usize];
            if m.frequency > lambda_max {
                continue;
            }
            f(Atom {
                key: m.key,
                lambda: m.frequency,
                mu: self.h_modes[e.k as usize].frequency,
                weight: e.value,
            });
        }
    }

    fn has_eigenvalue(&self, key: EigenKey) -> bool {
        self.m_modes.iter().any(|m| m.key == key)
    }
}

/// Largest table the shell source will allocate (sums of squares up to this).
pub const SHELL_LIMIT: u64 = 50_000_000;
const SHELL_CHUNK: u64 = 2048;

/// Torus pairs with equal periods, grouped by a = |m_T|² and b = |m_⊥|².
///
/// The atom (a, b) carries weight r_d(a) r_{n−d}(b) / Π_{i>d} P_i where r_k
/// counts representations as a sum of k squares, so the table of individual
/// modes is never materialized.
#[derive(Debug, Clone)]
pub struct TorusShells {
    pair: ManifoldPair,
    lambda_max: f64,
    /// Frequency per unit of sqrt(|m|²).
    unit: f64,
    s_max: u64,
    r_h: Vec<u64>,
    r_perp: Vec<u64>,
    perp_support: Vec<u32>,
    base_weight: f64,
}

/// r_k(s) for s ≤ s_max by repeated convolution with r_1.
pub fn sum_of_squares_counts(k: usize, s_max: u64) -> Vec<u64> {
    let len = s_max as usize + 1;
    let mut r1 = vec![0u64; len];
    let mut j = 0usize;
    while j * j < len {
        r1[j * j] += if j == 0 { 1 } else { 2 };
        j += 1;
    }
    let mut cur = r1.clone();
    for _ in 1..k {
        let mut next = vec![0u64; len];
        let mut j = 0usize;
        while j * j < len {
            let w = if j == 0 { 1 } else { 2 };
            let off = j * j;
            for (dst, src) in next[off..].iter_mut().zip(&cur[..len - off]) {
                *dst += w * src;
            }
            j += 1;
        }
        cur = next;
    }
    cur
}

impl TorusShells {
    pub fn new(pair: &ManifoldPair, lambda_max: f64) -> Result<Self> {
        pair.validate()?;
        if pair.kind != PairKind::Torus {
            return Err(Error::Invalid(format!("shell source needs a torus pair, got {}", pair.descriptor())));
        }
        if !pair.equal_periods() {
            return Err(Error::Invalid("shell source needs equal torus periods".into()));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::Invalid(format!("cutoff must be positive, got {lambda_max}")));
        }
        let unit = 2.0 * PI / pair.torus_periods[0];
        let mut s_max = ((lambda_max / unit).powi(2)).floor() as u64;
        while ((s_max + 1) as f64).sqrt() * unit <= lambda_max {
            s_max += 1;
        }
        while s_max > 0 && (s_max as f64).sqrt() * unit > lambda_max {
            s_max -= 1;
        }
        if s_max > SHELL_LIMIT {
            return Err(Error::Budget {
                what: "sum-of-squares table",
                needed: s_max,
                budget: SHELL_LIMIT,
            });
        }
        let r_h = sum_of_squares_counts(pair.d, s_max);
        let r_perp = sum_of_squares_counts(pair.n - pair.d, s_max);
        let perp_support = (0..=s_max as u32).filter(|&b| r_perp[b as usize] > 0).collect();
        let base_weight = 1.0 / pair.torus_periods[pair.d..].iter().product::<f64>();
        Ok(TorusShells {
            pair: pair.clone(),
            lambda_max,
            unit,
            s_max,
            r_h,
            r_perp,
            perp_support,
            base_weight,
        })
    }

    /// Number of lattice points of Z^n on the sphere |m|² = s.
    pub fn multiplicity(&self, s: u64) -> u64 {
        if s > self.s_max {
            return 0;
        }
        (0..=s as usize).map(|a| self.r_h[a] * self.r_perp[s as usize - a]).sum()
    }

    pub fn key_of_frequency(&self, lambda: f64) -> Option<EigenKey> {
        let s = (lambda / self.unit).powi(2).round() as u64;
        ((s as f64).sqrt() * self.unit == lambda).then_some(EigenKey(s))
    }
}

impl SpectralSource for TorusShells {
    fn pair(&self) -> &ManifoldPair {
        &self.pair
    }

    fn lambda_cap(&self) -> f64 {
        self.lambda_max
    }

    fn mu_cap(&self) -> f64 {
        self.lambda_max
    }

    fn chunk_count(&self) -> usize {
        ((self.s_max + 1).div_ceil(SHELL_CHUNK)) as usize
    }

    fn visit_chunk(&self, chunk: usize, lambda_max: f64, window: Window, f: &mut dyn FnMut(Atom)) {
        let a0 = chunk as u64 * SHELL_CHUNK;
        let a1 = ((chunk as u64 + 1) * SHELL_CHUNK).min(self.s_max + 1);
        let lmax = lambda_max.min(self.lambda_max);
        for a in a0..a1 {
            let ra = self.r_h[a as usize];
            if ra == 0 {
                continue;
            }
            let mu = (a as f64).sqrt() * self.unit;
            if mu > lmax {
                break;
            }
            // b range allowed by the cutoff and the window, padded by one
            let lam_hi = lmax / self.unit;
            let mut b_hi = (lam_hi * lam_hi).floor() as u64 + 1;
            let mut b_lo = 0u64;
            if let Window::Near { c, half_width } = window {
                if c > 0.0 {
                    let lo = ((mu - half_width) / c).max(0.0) / self.unit;
                    let hi = ((mu + half_width) / c) / self.unit;
                    b_lo = ((lo * lo).floor() as u64).saturating_sub(a + 1);
                    b_hi = b_hi.min((hi * hi).ceil() as u64 + 1);
                } else if mu > half_width {
                    continue;
                }
            }
            b_hi = b_hi.saturating_sub(a).min(self.s_max - a);
            if b_lo > b_hi {
                continue;
            }
            let i0 = self.perp_support.partition_point(|&b| (b as u64) < b_lo);
            for &b in self.perp_support[i0..].iter().take_while(|&&b| b as u64 <= b_hi) {
                let s = a + b as u64;
                let lambda = (s as f64).sqrt() * self.unit;
                if lambda > lmax {
                    break;
                }
                f(Atom {
                    key: EigenKey(s),
                    lambda,
                    mu,
                    weight: (ra * self.r_perp[b as usize]) as f64 * self.base_weight,
                });
            }
        }
    }

    fn has_eigenvalue(&self, key: EigenKey) -> bool {
        self.multiplicity(key.0) > 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::build_table;

    #[test]
    fn representation_counts() {
        let r2 = sum_of_squares_counts(2, 30);
        assert_eq!(&r2[..6], &[1, 4, 4, 0, 4, 8]);
        assert_eq!(r2[25], 12);
        let r3 = sum_of_squares_counts(3, 10);
        assert_eq!(&r3[..7], &[1, 6, 12, 8, 6, 24, 24]);
    }

    fn collect(src: &dyn SpectralSource, lmax: f64, w: Window) -> Vec<(u64, u64, f64)> {
        let mut out = Vec::new();
        for c in 0..src.chunk_count() {
            src.visit_chunk(c, lmax, w, &mut |a| {
                out.push((a.key.0, (a.mu * a.mu).round() as u64, a.weight));
            });
        }
        out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        // merge identical (key, μ) atoms
        let mut merged: Vec<(u64, u64, f64)> = Vec::new();
        for x in out {
            match merged.last_mut() {
                Some(l) if l.0 == x.0 && l.1 == x.1 => l.2 += x.2,
                _ => merged.push(x),
            }
        }
        merged
    }

    #[test]
    fn shells_match_table() {
        for (n, d) in [(2usize, 1usize), (3, 1), (3, 2)] {
            let pair = ManifoldPair::torus(n, d).unwrap();
            let table = build_table(&pair, 9.0).unwrap();
            let shells = TorusShells::new(&pair, 9.0).unwrap();
            let a = collect(&table, 9.0, Window::All);
            let b = collect(&shells, 9.0, Window::All);
            assert_eq!(a.len(), b.len(), "({n},{d})");
            for (x, y) in a.iter().zip(&b) {
                assert_eq!((x.0, x.1), (y.0, y.1));
                assert!((x.2 - y.2).abs() < 1e-12 * x.2);
            }
            // window pruning only removes atoms outside the window
            let w = collect(&shells, 9.0, Window::Near { c: 1.0, half_width: 0.5 });
            let inside: Vec<_> = b
                .iter()
                .filter(|x| ((x.0 as f64).sqrt() - (x.1 as f64).sqrt()).abs() <= 0.5)
                .collect();
            let w_inside: Vec<_> = w
                .iter()
                .filter(|x| ((x.0 as f64).sqrt() - (x.1 as f64).sqrt()).abs() <= 0.5)
                .collect();
            assert_eq!(inside, w_inside);
        }
    }

    #[test]
    fn shell_multiplicity_and_keys() {
        let pair = ManifoldPair::torus(2, 1).unwrap();
        let s = TorusShells::new(&pair, 10.0).unwrap();
        assert_eq!(s.multiplicity(25), 12);
        assert!(s.has_eigenvalue(EigenKey(25)));
        assert!(!s.has_eigenvalue(EigenKey(3)));
        assert_eq!(s.key_of_frequency(5.0), Some(EigenKey(25)));
        assert_eq!(s.key_of_frequency(5.1), None);
        let unequal = pair.clone().with_periods(vec![1.0, 2.0]).unwrap();
        assert!(TorusShells::new(&unequal, 10.0).is_err());
    }
}
