//! Boundary values (s ± i0)^{−α} paired with compactly supported functions,
//! computed on a damping schedule ε_k and Richardson-extrapolated to ε = 0.

use super::gamma::gamma;
use super::quadrature::{gauss_legendre, graded_breaks, FilonTransform};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedPower {
    pub alpha: f64,
    pub schedule: Vec<f64>,
}

impl RegularizedPower {
    /// Default schedule ε_k = 2^{−k}, k = 4..=14.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_schedule(alpha, default_schedule())
    }

    pub fn with_schedule(alpha: f64, schedule: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Invalid(format!("exponent alpha must be positive, got {alpha}")));
        }
        validate_schedule(&schedule)?;
        Ok(RegularizedPower { alpha, schedule })
    }
}

pub fn default_schedule() -> Vec<f64> {
    (4..=14).map(|k| 2f64.powi(-k)).collect()
}

fn validate_schedule(s: &[f64]) -> Result<()> {
    if s.len() < 5 {
        return Err(Error::Invalid("damping schedule needs at least 5 steps".into()));
    }
    if s.iter().any(|&e| !(e > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("damping schedule must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Result of an ε → 0 extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub value: Complex64,
    /// Last Richardson residual.
    pub error: f64,
    /// Raw values on the schedule.
    pub raw: Vec<Complex64>,
}

/// Three-point Richardson extrapolation for a halving-type schedule with an
/// integer-power error expansion; rejects sequences whose last three
/// residuals grow.
pub fn richardson(schedule: &[f64], raw: &[Complex64]) -> Result<Extrapolated> {
    let n = raw.len();
    // first level: remove O(ε)
    let r1: Vec<Complex64> = (1..n)
        .map(|k| {
            let q = schedule[k - 1] / schedule[k];
            (raw[k] * q - raw[k - 1]) / (q - 1.0)
        })
        .collect();
    // second level: remove O(ε²)
    let r2: Vec<Complex64> = (1..r1.len())
        .map(|k| {
            let q = schedule[k] / schedule[k + 1];
            let q2 = q * q;
            (r1[k] * q2 - r1[k - 1]) / (q2 - 1.0)
        })
        .collect();
    let res: Vec<f64> = r2.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let value = *r2.last().expect("schedule too short");
    // residuals under this are quadrature noise amplified by the extrapolation
    let floor = 1e-9 * value.norm().max(1e-300);
    let tail = &res[res.len().saturating_sub(3)..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
    if !monotone {
        return Err(Error::NoConvergence { residuals: tail.to_vec() });
    }
    Ok(Extrapolated {
        value,
        error: *res.last().unwrap(),
        raw: raw.to_vec(),
    })
}

/// Principal branch z^{−α}.
pub fn principal_power(z: Complex64, alpha: f64) -> Complex64 {
    (-alpha * z.ln()).exp()
}

/// A real function on [lo, hi] with optional interior kinks.
pub struct Compact<'a> {
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
}

impl<'a> Compact<'a> {
    pub fn new(f: &'a (dyn Fn(f64) -> f64 + Sync), lo: f64, hi: f64) -> Self {
        Compact {
            f,
            lo,
            hi,
            breaks: Vec::new(),
        }
    }

    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.breaks = breaks.to_vec();
        self
    }

    fn panels(&self, eps: f64) -> Vec<f64> {
        let mut b = if self.lo <= 0.0 && 0.0 <= self.hi {
            graded_breaks(self.lo, self.hi, 0.0, 0.02 * eps, 2.0)
        } else {
            // split long intervals uniformly
            let n = ((self.hi - self.lo) / 0.25).ceil().max(8.0) as usize;
            (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
        };
        b.extend(self.breaks.iter().copied().filter(|x| *x > self.lo && *x < self.hi));
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

/// ∫ f(s) K(s ± iε) ds at one ε.
pub fn damped_integral<K: Fn(Complex64) -> Complex64>(f: &Compact, kernel: &K, side: Side, eps: f64) -> Complex64 {
    let rule = gauss_legendre(24);
    let shift = Complex64::new(0.0, side.sign() * eps);
    let mut total = Complex64::new(0.0, 0.0);
    for w in f.panels(eps).windows(2) {
        total += rule.integrate_complex(w[0], w[1], |s| kernel(Complex64::new(s, 0.0) + shift) * (f.f)(s));
    }
    total
}

/// lim_{ε→0⁺} ∫ f(s) K(s ± iε) ds on the given schedule.
pub fn regularized_limit<K: Fn(Complex64) -> Complex64>(
    f: &Compact,
    kernel: K,
    side: Side,
    schedule: &[f64],
) -> Result<Extrapolated> {
    validate_schedule(schedule)?;
    let raw: Vec<Complex64> = schedule
        .iter()
        .map(|&e| damped_integral(f, &kernel, side, e))
        .collect();
    richardson(schedule, &raw)
}

/// ⟨f, (s ± i0)^{−α}⟩.
pub fn regularized_pairing(f: &Compact, reg: &RegularizedPower, side: Side) -> Result<Extrapolated> {
    let alpha = reg.alpha;
    regularized_limit(f, move |z| principal_power(z, alpha), side, &reg.schedule)
}

/// ⟨f, (sin(s ± i0))^{−α}⟩ for f supported in (−π, π); the branch is the one
/// continuous from s > 0, i.e. (s ± i0)^{−α} · (sin s / s)^{−α}.
pub fn sine_power_pairing(f: &Compact, reg: &RegularizedPower, side: Side) -> Result<Extrapolated> {
    if f.lo <= -std::f64::consts::PI || f.hi >= std::f64::consts::PI {
        return Err(Error::Invalid("sine-power pairing needs support inside (-pi, pi)".into()));
    }
    let alpha = reg.alpha;
    let kernel = move |z: Complex64| {
        let sinc = if z.norm() < 1e-6 {
            Complex64::new(1.0, 0.0) - z * z / 6.0
        } else {
            z.sin() / z
        };
        principal_power(z, alpha) * principal_power(sinc, alpha)
    };
    regularized_limit(f, kernel, side, &reg.schedule)
}

/// (σ + i0)^{−p} for real σ ≠ 0.
pub fn boundary_power(sigma: f64, p: f64) -> Complex64 {
    if sigma > 0.0 {
        Complex64::new(sigma.powf(-p), 0.0)
    } else {
        Complex64::from_polar(sigma.abs().powf(-p), -std::f64::consts::PI * p)
    }
}

/// i e^{iβπ/2} Γ(β+1) (σ + i0)^{−β−1}.
pub fn fourier_power_closed_form(beta: f64, sigma: f64) -> Complex64 {
    Complex64::i() * Complex64::from_polar(gamma(beta + 1.0), 0.5 * beta * std::f64::consts::PI) * boundary_power(sigma, beta + 1.0)
}

/// ∫_0^∞ e^{iσt − εt} t^β dt by quadrature (graded panels near 0, Filon panels
/// on the oscillatory tail).
pub fn damped_fourier_power(beta: f64, sigma: f64, eps: f64) -> Complex64 {
    let rule = gauss_legendre(24);
    let head_end = 1.0f64.min(4.0 / sigma.abs().max(1e-300));
    let mut total = Complex64::new(0.0, 0.0);
    for w in graded_breaks(0.0, head_end, 0.0, 1e-14, 2.0).windows(2) {
        total += rule.integrate_complex(w[0], w[1], |t| {
            Complex64::from_polar(t.powf(beta) * (-eps * t).exp(), sigma * t)
        });
    }
    let end = head_end.max(45.0 / eps);
    let mut breaks = vec![head_end];
    while *breaks.last().unwrap() < end {
        let t = *breaks.last().unwrap();
        let len = t.min(2.0 / eps);
        breaks.push((t + len).min(end));
    }
    let tail = FilonTransform::new(&breaks, 24, |t| t.powf(beta) * (-eps * t).exp());
    total + tail.transform(sigma)
}

/// Damping steps for [`fourier_power_limit`], in units of |σ|.
pub fn fourier_schedule() -> Vec<f64> {
    (3..=10).map(|k| 2f64.powi(-k)).collect()
}

/// Extrapolates [`damped_fourier_power`] to ε = 0. The schedule is read in
/// units of |σ|, since the damped value expands in powers of ε/σ; much
/// below ε/σ ≈ 1e-3 the tail quadrature loses more than it gains.
pub fn fourier_power_limit(beta: f64, sigma: f64, schedule: &[f64]) -> Result<Extrapolated> {
    if beta <= -1.0 {
        return Err(Error::Invalid("beta must exceed -1".into()));
    }
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::Invalid(format!("sigma must be finite and nonzero, got {sigma}")));
    }
    validate_schedule(schedule)?;
    let schedule: Vec<f64> = schedule.iter().map(|e| e * sigma.abs()).collect();
    let raw: Vec<Complex64> = schedule.iter().map(|&e| damped_fourier_power(beta, sigma, e)).collect();
    richardson(&schedule, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(s: f64) -> f64 {
        let u = s * s;
        if u >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u)).exp()
        }
    }

    #[test]
    fn away_from_zero_is_plain_quadrature() {
        let f = |s: f64| bump(2.0 * (s - 1.5));
        let c = Compact::new(&f, 1.0, 2.0);
        let reg = RegularizedPower::new(0.5).unwrap();
        let got = regularized_pairing(&c, &reg, Side::Plus).unwrap().value;
        let rule = gauss_legendre(64);
        let want = rule.integrate(1.0, 2.0, |s| f(s) / s.sqrt());
        assert!((got.re - want).abs() < 1e-10 && got.im.abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn even_bump_matches_one_sided_decomposition() {
        let f = |s: f64| bump(s);
        let c = Compact::new(&f, -1.0, 1.0);
        let reg = RegularizedPower::new(0.5).unwrap();
        let plus = regularized_pairing(&c, &reg, Side::Plus).unwrap().value;
        let minus = regularized_pairing(&c, &reg, Side::Minus).unwrap().value;
        // s_+^{−1/2}: substitute s = u² to remove the endpoint singularity
        let rule = gauss_legendre(80);
        let one_sided = rule.integrate(0.0, 1.0, |u| 2.0 * f(u * u));
        let want = Complex64::new(one_sided, 0.0) + Complex64::from_polar(one_sided, -0.5 * PI);
        assert!((plus - want).norm() < 1e-8, "{plus} vs {want}");
        assert!((minus - want.conj()).norm() < 1e-8);
    }

    #[test]
    fn gamma_identity_spot() {
        for (beta, sigma) in [(0.25, 3.0), (1.5, 10.0), (0.5, -2.0)] {
            let got = fourier_power_limit(beta, sigma, &fourier_schedule()).unwrap().value;
            let want = fourier_power_closed_form(beta, sigma);
            assert!((got - want).norm() < 1e-6 * want.norm(), "{got} vs {want}");
        }
        assert!(fourier_power_limit(0.5, 0.0, &fourier_schedule()).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RegularizedPower::new(0.0).is_err());
        assert!(RegularizedPower::with_schedule(0.5, vec![0.1, 0.2, 0.05, 0.01, 0.001]).is_err());
    }

    #[test]
    fn richardson_flags_divergence() {
        let s = default_schedule();
        let raw: Vec<Complex64> = s.iter().map(|e| Complex64::new(1.0 / e, 0.0)).collect();
        assert!(richardson(&s, &raw).is_err());
    }
}
