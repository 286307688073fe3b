//! Growth-exponent and leading-coefficient fits, and the predicted
//! coefficients they are compared against.

use crate::error::{Error, Result};
use crate::kuznecov::{JumpEntry, SpectralProfile, SumTable};
use crate::numeric::{ols, t_quantile_975};
use crate::special::quadrature::gauss_legendre;
use crate::special::regularized::{regularized_pairing, sine_power_pairing, Compact, RegularizedPower, Side};
use crate::special::sphere_area;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub coefficient: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// log N − fitted line at each point of the window.
    pub residual_profile: Vec<f64>,
}

fn window_points(table: &SumTable, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Invalid(format!("fit window needs lo < hi, got {lo}:{hi}")));
    }
    let pts: Vec<(f64, f64)> = table
        .lambda_grid
        .iter()
        .zip(&table.values)
        .filter(|(l, _)| **l >= lo && **l <= hi)
        .map(|(l, v)| (*l, *v))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!(
            "window {lo}:{hi} holds {} grid points, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    if let Some((l, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::DegenerateFit(format!("nonpositive value {v} at λ = {l}")));
    }
    Ok(pts.into_iter().unzip())
}

/// Least squares of log N against log λ.
pub fn fit_growth(table: &SumTable, window: (f64, f64)) -> Result<FitReport> {
    let (l, v) = window_points(table, window)?;
    let x: Vec<f64> = l.iter().map(|x| x.ln()).collect();
    let y: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (alpha, beta, se, r2) = ols(&x, &y)?;
    Ok(FitReport {
        exponent: beta,
        exponent_stderr: se,
        coefficient: alpha.exp(),
        r_squared: r2,
        window,
        points: x.len(),
        residual_profile: x.iter().zip(&y).map(|(a, b)| b - alpha - beta * a).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    /// Leading coefficient A in N ≈ A λ^p + B λ^{p−1}.
    pub coefficient: f64,
    pub stderr: f64,
    pub subleading: f64,
    pub exponent: f64,
    pub points: usize,
}

/// Regresses N/λ^p on 1/λ; the intercept is the leading coefficient.
pub fn fit_leading_coefficient(table: &SumTable, window: (f64, f64), exponent: f64) -> Result<CoefficientFit> {
    let (l, v) = window_points(table, window)?;
    let x: Vec<f64> = l.iter().map(|x| 1.0 / x).collect();
    let y: Vec<f64> = l.iter().zip(&v).map(|(a, b)| b / a.powf(exponent)).collect();
    let (alpha, beta, _, _) = ols(&x, &y)?;
    // standard error of the intercept
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - alpha - beta * a).powi(2)).sum();
    let s2 = sse / (n - 2.0);
    let stderr = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    Ok(CoefficientFit {
        coefficient: alpha,
        stderr,
        subleading: beta,
        exponent,
        points: x.len(),
    })
}

/// (n+d)/2 at c = 1, n − 1 for 0 ≤ c < 1.
pub fn predicted_exponent(c: f64, n: usize, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Invalid(format!("c must lie in [0, 1], got {c}")));
    }
    if d < 1 || d >= n {
        return Err(Error::Invalid(format!("need 1 <= d <= n-1, got n={n}, d={d}")));
    }
    Ok(if c == 1.0 { (n + d) as f64 / 2.0 } else { n as f64 - 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formula {
    SphereGlobal,
    FlatRegularized,
    SubcriticalC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPrediction {
    pub value: Complex64,
    /// Absolute extrapolation error estimate.
    pub error: f64,
    /// Same quantity by plain quadrature, when the integrand allows it.
    pub direct: Option<Complex64>,
    pub formula: Formula,
    pub n: usize,
    pub d: usize,
    pub psi: String,
    pub c: f64,
}

impl CoefficientPrediction {
    /// e^{iπ(n−d)/4} · value, which is real and nonnegative for ψ ≥ 0 with even ψ̂.
    pub fn phase_normalized(&self) -> Complex64 {
        match self.formula {
            Formula::SubcriticalC => self.value,
            _ => self.value * Complex64::from_polar(1.0, PI * (self.n - self.d) as f64 / 4.0),
        }
    }
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if n < 2 || d < 1 || d >= n {
        return Err(Error::Invalid(format!("need 1 <= d <= n-1, got n={n}, d={d}")));
    }
    Ok(())
}

fn compact_support(profile: &dyn SpectralProfile) -> Result<(f64, f64)> {
    let (lo, hi) = profile.hat_support();
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Invalid(format!("{} has no compactly supported transform", profile.label())));
    }
    Ok((lo, hi))
}

/// ∫_0^b f(s) s^{−α} K(s) ds for α < 1 via s = u^{1/(1−α)}.
fn weakly_singular(f: &dyn Fn(f64) -> f64, alpha: f64, b: f64, kinks: &[f64]) -> f64 {
    let p = 1.0 / (1.0 - alpha);
    let top = b.powf(1.0 - alpha);
    let mut breaks = vec![0.0];
    for k in kinks {
        if *k > 0.0 && *k < b {
            breaks.push(k.powf(1.0 - alpha));
        }
    }
    breaks.push(top);
    let rule = gauss_legendre(48);
    let mut s = 0.0;
    for w in breaks.windows(2) {
        let m = 16;
        for i in 0..m {
            let a0 = w[0] + (w[1] - w[0]) * i as f64 / m as f64;
            let a1 = w[0] + (w[1] - w[0]) * (i + 1) as f64 / m as f64;
            s += rule.integrate(a0, a1, |u| f(u.powf(p))) * p;
        }
    }
    s
}

/// Direct path for α < 1: one-sided integrals with the phase e^{−iπα} on s < 0.
fn direct_pairing(profile: &dyn SpectralProfile, alpha: f64, kernel: &dyn Fn(f64) -> f64) -> Result<Option<Complex64>> {
    let (lo, hi) = compact_support(profile)?;
    let kinks = profile.hat_kinks();
    if lo > 0.0 {
        let rule = gauss_legendre(48);
        let m = 32;
        let mut s = 0.0;
        for i in 0..m {
            let a0 = lo + (hi - lo) * i as f64 / m as f64;
            let a1 = lo + (hi - lo) * (i + 1) as f64 / m as f64;
            s += rule.integrate(a0, a1, |x| profile.hat(x) * x.powf(-alpha) * kernel(x));
        }
        return Ok(Some(Complex64::new(s, 0.0)));
    }
    if alpha >= 1.0 {
        return Ok(None);
    }
    let pos = if hi > 0.0 {
        weakly_singular(&|s| profile.hat(s) * kernel(s), alpha, hi, &kinks)
    } else {
        0.0
    };
    let neg_kinks: Vec<f64> = kinks.iter().map(|k| -k).collect();
    let neg = weakly_singular(&|s| profile.hat(-s) * kernel(s), alpha, -lo, &neg_kinks);
    Ok(Some(Complex64::new(pos, 0.0) + Complex64::from_polar(neg, -PI * alpha)))
}

fn compact_of<'a>(f: &'a (dyn Fn(f64) -> f64 + Sync), profile: &dyn SpectralProfile) -> Result<Compact<'a>> {
    let (lo, hi) = compact_support(profile)?;
    Ok(Compact::new(f, lo, hi).with_breaks(&profile.hat_kinks()))
}

/// ∫ ψ̂(s) (s + i0)^{−α} ds. A kink of ψ̂ at 0 leaves an ε^{2−α} term in the
/// damped values, so the extrapolated value is then only good to about
/// ε_min^{2−α}; the direct path (α < 1) is exact up to quadrature.
pub fn flat_pairing(profile: &dyn SpectralProfile, alpha: f64) -> Result<(Complex64, f64, Option<Complex64>)> {
    let f = |s: f64| profile.hat(s);
    let c = compact_of(&f, profile)?;
    let reg = RegularizedPower::new(alpha)?;
    let e = regularized_pairing(&c, &reg, Side::Plus)?;
    let direct = direct_pairing(profile, alpha, &|_| 1.0)?;
    Ok((e.value, e.error, direct))
}

/// a(S^d, ψ) = ∫ ψ̂(s) (sin(s + i0))^{−(n−d)/2} ds.
pub fn sphere_leading_coefficient(n: usize, d: usize, profile: &dyn SpectralProfile) -> Result<CoefficientPrediction> {
    check_dims(n, d)?;
    let (lo, hi) = compact_support(profile)?;
    if lo <= -PI || hi >= PI {
        return Err(Error::Invalid("transform support must lie inside (-pi, pi)".into()));
    }
    let alpha = (n - d) as f64 / 2.0;
    let f = |s: f64| profile.hat(s);
    let c = compact_of(&f, profile)?;
    let reg = RegularizedPower::new(alpha)?;
    let e = sine_power_pairing(&c, &reg, Side::Plus)?;
    let sinc = move |s: f64| if s == 0.0 { 1.0 } else { (s.sin() / s).powf(-alpha) };
    let direct = direct_pairing(profile, alpha, &sinc)?;
    Ok(CoefficientPrediction {
        value: e.value,
        error: e.error,
        direct,
        formula: Formula::SphereGlobal,
        n,
        d,
        psi: profile.label(),
        c: 1.0,
    })
}

/// vol(H) |S^{d−1}| ∫ ψ̂(s) (s + i0)^{−(n−d)/2} ds on the flat torus with
/// periods 2π; the universal constant is left out.
pub fn flat_leading_coefficient(n: usize, d: usize, profile: &dyn SpectralProfile) -> Result<CoefficientPrediction> {
    check_dims(n, d)?;
    let alpha = (n - d) as f64 / 2.0;
    let (value, error, direct) = flat_pairing(profile, alpha)?;
    let factor = (2.0 * PI).powi(d as i32) * sphere_area(d - 1);
    Ok(CoefficientPrediction {
        value: value * factor,
        error: error * factor,
        direct: direct.map(|v| v * factor),
        formula: Formula::FlatRegularized,
        n,
        d,
        psi: profile.label(),
        c: 1.0,
    })
}

/// ψ̂(0) c^{d−1} (1 − c²)^{(n−d−2)/2} vol(H).
pub fn subcritical_coefficient(n: usize, d: usize, c: f64, profile: &dyn SpectralProfile, vol_h: f64) -> Result<CoefficientPrediction> {
    check_dims(n, d)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Invalid(format!("subcritical coefficient needs 0 < c < 1, got {c}")));
    }
    let v = profile.hat(0.0) * c.powi(d as i32 - 1) * (1.0 - c * c).powf((n as f64 - d as f64 - 2.0) / 2.0) * vol_h;
    Ok(CoefficientPrediction {
        value: Complex64::new(v, 0.0),
        error: 0.0,
        direct: Some(Complex64::new(v, 0.0)),
        formula: Formula::SubcriticalC,
        n,
        d,
        psi: profile.label(),
        c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpBoundReport {
    pub exponent: f64,
    pub count: usize,
    pub max: f64,
    pub median: f64,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub pass: bool,
}

/// Trend of J(λ_j)/λ_j^{(n+d)/2−1} against log λ_j; passes unless the
/// slope is significantly positive.
pub fn jump_bound_check(jumps: &[JumpEntry], n: usize, d: usize) -> Result<JumpBoundReport> {
    check_dims(n, d)?;
    let p = (n + d) as f64 / 2.0 - 1.0;
    let pts: Vec<(f64, f64)> = jumps
        .iter()
        .filter(|j| j.lambda > 0.0)
        .map(|j| (j.lambda.ln(), j.value / j.lambda.powf(p)))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!("only {} jumps in range", pts.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (_, slope, se, _) = ols(&x, &y)?;
    let t = t_quantile_975(x.len() - 2);
    let ci = (slope - t * se, slope + t * se);
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(JumpBoundReport {
        exponent: p,
        count: y.len(),
        max: *sorted.last().unwrap(),
        median: sorted[sorted.len() / 2],
        slope,
        slope_ci: ci,
        pass: ci.0 <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kuznecov::{ShiftedBump, TestFunction};
    use crate::numeric::dyadic_grid;
    use crate::spectra::EigenKey;

    #[test]
    fn exact_power_law() {
        let g = dyadic_grid(10.0, 1000.0, 4).unwrap();
        let v: Vec<f64> = g.iter().map(|l| 3.0 * l.powf(2.5)).collect();
        let t = SumTable::synthetic(g.clone(), v.clone()).unwrap();
        let f = fit_growth(&t, (10.0, 1000.0)).unwrap();
        assert!((f.exponent - 2.5).abs() < 1e-10);
        assert!((f.coefficient - 3.0).abs() < 1e-9);
        let scaled = SumTable::synthetic(g, v.iter().map(|x| 7.0 * x).collect()).unwrap();
        let f2 = fit_growth(&scaled, (10.0, 1000.0)).unwrap();
        assert!((f2.exponent - f.exponent).abs() < 1e-12);
        let c = fit_leading_coefficient(&t, (10.0, 1000.0), 2.5).unwrap();
        assert!((c.coefficient - 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_needs_points() {
        let t = SumTable::synthetic(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(fit_growth(&t, (1.0, 3.0)), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn exponents() {
        assert_eq!(predicted_exponent(1.0, 3, 2).unwrap(), 2.5);
        assert_eq!(predicted_exponent(0.5, 3, 2).unwrap(), 2.0);
        for n in 2..8 {
            assert!(predicted_exponent(1.0, n, n - 1).unwrap() > (n - 1) as f64);
            for d in 1..n - 1 {
                assert!(predicted_exponent(1.0, n, d).unwrap() <= (n - 1) as f64);
            }
        }
        assert!(predicted_exponent(1.2, 3, 1).is_err());
    }

    #[test]
    fn sphere_coefficient_away_from_zero() {
        let b = ShiftedBump::new(0.5, 1.0).unwrap();
        let p = sphere_leading_coefficient(3, 1, &b).unwrap();
        let direct = p.direct.unwrap();
        assert!((p.value - direct).norm() < 1e-8, "{} vs {}", p.value, direct);
    }

    #[test]
    fn flat_half_power_needs_no_regularization() {
        // d = n − 1: both paths must agree
        let b = TestFunction::bump_square(1.0).unwrap();
        let (value, _, direct) = flat_pairing(&b, 0.5).unwrap();
        let direct = direct.unwrap();
        assert!((value - direct).norm() < 1e-8, "{value} vs {direct}");
        // the Fejér kink at 0 leaves an ε^{3/2} term that the extrapolation
        // does not remove; the direct path hits the closed form (4/3)(1 − i)
        let f = TestFunction::fejer(1.0).unwrap();
        let (value, _, direct) = flat_pairing(&f, 0.5).unwrap();
        let direct = direct.unwrap();
        assert!((direct - Complex64::new(4.0 / 3.0, -4.0 / 3.0)).norm() < 1e-10);
        assert!((value - direct).norm() < 1e-5);
        let p = flat_leading_coefficient(3, 2, &f).unwrap();
        assert!(p.phase_normalized().re > 0.0 && p.phase_normalized().im.abs() < 1e-7 * p.phase_normalized().re);
    }

    #[test]
    fn flat_scaling_in_h() {
        // ψ̂ concentrating near 0⁺: ψ̂_h(s) = b(s/h) gives h^{1−α}
        let alpha = 1.5;
        let base = ShiftedBump::new(0.5, 1.0).unwrap();
        let small = ShiftedBump::new(0.05, 0.1).unwrap();
        let (v1, _, _) = flat_pairing(&base, alpha).unwrap();
        let (v2, _, _) = flat_pairing(&small, alpha).unwrap();
        let ratio = v2.re / v1.re;
        assert!((ratio - 0.1f64.powf(1.0 - alpha)).abs() < 1e-7 * ratio);
    }

    #[test]
    fn second_order_sine_decomposition() {
        // n − d = 2 with even ψ̂: the regularized value is −iπ ψ̂(0) plus the
        // principal value of ψ̂(s)(1/sin s − 1/s), which is odd and vanishes
        let f = TestFunction::bump_square(1.0).unwrap();
        let p = sphere_leading_coefficient(3, 1, &f).unwrap();
        assert!((p.value - Complex64::new(0.0, -PI * f.hat_value(0.0))).norm() < 1e-6, "{}", p.value);
    }

    #[test]
    fn subcritical_shape() {
        let f = TestFunction::fejer(1.0).unwrap();
        let a = subcritical_coefficient(3, 1, 0.3, &f, 2.0 * PI).unwrap();
        let b = subcritical_coefficient(3, 1, 0.6, &f, 2.0 * PI).unwrap();
        assert_eq!(a.value, b.value);
        let c = subcritical_coefficient(5, 1, 0.999, &f, 1.0).unwrap();
        assert!(c.value.re < 0.01);
        assert!(subcritical_coefficient(3, 1, 1.0, &f, 1.0).is_err());
    }

    #[test]
    fn jump_bound_flags_growth() {
        let bad: Vec<JumpEntry> = (1..50)
            .map(|i| JumpEntry {
                key: EigenKey(i),
                lambda: i as f64 * 10.0,
                value: (i as f64 * 10.0).powf(1.5),
            })
            .collect();
        assert!(!jump_bound_check(&bad, 2, 1).unwrap().pass);
        let good: Vec<JumpEntry> = (1..50)
            .map(|i| JumpEntry {
                key: EigenKey(i),
                lambda: i as f64 * 10.0,
                value: (i as f64 * 10.0).sqrt() * (1.0 + 0.3 * (i as f64).sin()),
            })
            .collect();
        assert!(jump_bound_check(&good, 2, 1).unwrap().pass);
    }
}
