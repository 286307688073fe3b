//! The Euclidean double-sphere integral with its product-of-Bessel closed form.

use crate::error::{Error, Result};
use crate::kuznecov::SpectralProfile;
use crate::special::{funk_hecke_closed_form, gauss_legendre, sphere_area};
use crate::special::funk_hecke_quadrature;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Above this λr the angular quadrature is flagged as possibly under-resolved.
pub const QUADRATURE_LIMIT: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBessel {
    pub lambda_r: f64,
    /// (2π)^{(n+d)/2} (λr)^{−(n−2)/2} J_{(n−2)/2}(λr) (λr)^{−(d−2)/2} J_{(d−2)/2}(λr),
    /// with the d = 1 factor read as 2cos(λr).
    pub closed_form: f64,
    /// Product of the two sphere integrals, each reduced to one polar angle.
    pub quadrature: Complex64,
}

impl DoubleBessel {
    pub fn relative_gap(&self) -> f64 {
        (self.quadrature - self.closed_form).norm() / self.closed_form.abs()
    }
}

fn check(n: usize, d: usize, lambda: f64, y: &[f64]) -> Result<f64> {
    if d == 0 || d >= n {
        return Err(Error::Invalid(format!("need 1 <= d < n, got n={n}, d={d}")));
    }
    if y.len() != d {
        return Err(Error::Invalid(format!("y must have {d} components, got {}", y.len())));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(Error::Invalid("|y| must be positive".into()));
    }
    let x = lambda * r;
    if x > QUADRATURE_LIMIT {
        log::warn!("double_bessel: lambda*r = {x:e} exceeds {QUADRATURE_LIMIT:e}, quadrature may be under-resolved");
    }
    Ok(r)
}

/// ∫_{S^{n−1}} ∫_{S^{d−1}} e^{iλ⟨y, π ω − ω̃⟩} dS dS̃ for y ∈ R^d, both ways.
pub fn double_bessel(n: usize, d: usize, lambda: f64, y: &[f64]) -> Result<DoubleBessel> {
    let r = check(n, d, lambda, y)?;
    let x = lambda * r;
    let closed_form = funk_hecke_closed_form(n, x)? * funk_hecke_closed_form(d, x)?;
    // ⟨y, πω⟩ = r ω_1 after a rotation of R^n fixing R^d; the S^{d−1} factor is real by symmetry.
    let quadrature = Complex64::new(funk_hecke_quadrature(n, x) * funk_hecke_quadrature(d, x), 0.0);
    Ok(DoubleBessel {
        lambda_r: x,
        closed_form,
        quadrature,
    })
}

/// Quadrature path with a general ψ̂ weighting the inner sphere.
pub fn double_bessel_weighted(n: usize, d: usize, lambda: f64, y: &[f64], profile: &dyn SpectralProfile) -> Result<Complex64> {
    let r = check(n, d, lambda, y)?;
    let x = lambda * r;
    let outer = funk_hecke_quadrature(n, x);
    let inner = if d == 1 {
        Complex64::from_polar(profile.hat(r), -x) + Complex64::from_polar(profile.hat(-r), x)
    } else {
        let panels = (x / 3.0).ceil() as usize + 8;
        let rule = gauss_legendre(24);
        let mut s = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let a = PI * p as f64 / panels as f64;
            let b = PI * (p + 1) as f64 / panels as f64;
            s += rule.integrate_complex(a, b, |t| {
                let c = t.cos();
                Complex64::from_polar(profile.hat(r * c) * t.sin().powi(d as i32 - 2), -x * c)
            });
        }
        s * sphere_area(d - 2)
    };
    Ok(inner * outer)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat;
    impl SpectralProfile for Flat {
        fn hat(&self, _: f64) -> f64 {
            1.0
        }
        fn hat_support(&self) -> (f64, f64) {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
        fn label(&self) -> String {
            "one".into()
        }
    }

    #[test]
    fn d_one_is_cosine_pair() {
        let v = double_bessel(3, 1, 2.0, &[1.5]).unwrap();
        let x: f64 = 3.0;
        let want = 4.0 * PI * x.sin() / x * 2.0 * x.cos();
        assert!((v.closed_form - want).abs() < 1e-12);
        assert!((v.quadrature.re - want).abs() < 1e-11);
    }

    #[test]
    fn n3_d2_at_five() {
        // dense two-angle product rule over S^2 × S^1 as an independent oracle
        let x = 5.0;
        let v = double_bessel(3, 2, 1.0, &[3.0, 4.0]).unwrap();
        let rule = gauss_legendre(64);
        let m = 200;
        let mut s2 = 0.0;
        for p in 0..m {
            let (a, b) = (PI * p as f64 / m as f64, PI * (p + 1) as f64 / m as f64);
            for (t, w) in rule.mapped(a, b) {
                // φ integrates to 2π since the phase sees only cos θ
                s2 += w * 2.0 * PI * t.sin() * (x * t.cos()).cos();
            }
        }
        let mut s1 = 0.0;
        for p in 0..m {
            let (a, b) = (2.0 * PI * p as f64 / m as f64, 2.0 * PI * (p + 1) as f64 / m as f64);
            for (t, w) in rule.mapped(a, b) {
                s1 += w * (x * t.cos()).cos();
            }
        }
        assert!((v.closed_form - s1 * s2).abs() < 1e-8 * v.closed_form.abs());
        assert!(v.relative_gap() < 1e-8);
    }

    #[test]
    fn small_argument_limit() {
        let v = double_bessel(4, 2, 1e-9, &[1.0, 0.0]).unwrap();
        let want = sphere_area(3) * sphere_area(1);
        assert!((v.closed_form - want).abs() < 1e-9 * want);
        assert!((v.quadrature.re - want).abs() < 1e-9 * want);
    }

    #[test]
    fn weighted_path_reduces_to_plain() {
        for (n, d) in [(3, 1), (4, 2), (5, 3)] {
            let y: Vec<f64> = (0..d).map(|i| 0.3 + i as f64 * 0.2).collect();
            let v = double_bessel(n, d, 7.0, &y).unwrap();
            let w = double_bessel_weighted(n, d, 7.0, &y, &Flat).unwrap();
            assert!((w - v.quadrature).norm() < 1e-9 * v.closed_form.abs(), "({n},{d})");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(double_bessel(3, 3, 1.0, &[1.0, 0.0, 0.0]).is_err());
        assert!(double_bessel(3, 2, 1.0, &[1.0]).is_err());
        assert!(double_bessel(3, 2, 1.0, &[0.0, 0.0]).is_err());
    }
}
