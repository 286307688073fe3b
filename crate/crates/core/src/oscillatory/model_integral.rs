//! The blow-down model integral
//!
//! I(λ) = ∫_{B_1(R^{n−1})} ∫_{R^d} χ(y) ψ̂(y_d) e^{iλ(⟨y', x'⟩ − ½ y_d |x|²)} dy dx
//!
//! with x = (x', x''), x' ∈ R^{d−1}. For a cutoff χ(y) = χ_⊥(|y'|) χ_d(y_d),
//! polar coordinates on the ball and Funk-Hecke on the distance spheres
//! reduce it to one radial integral
//!
//! I(λ) = ∫_0^1 ρ^{n−2} Φ(λρ²/2) B(λρ) dρ,
//! Φ(τ) = ∫ χ_d ψ̂(s) e^{−iτs} ds,  B(k) = ∫_{R^{d−1}} χ_⊥(|y'|) F_{n−1}(k|y'|) dy',
//!
//! where F_m(x) = ∫_{S^{m−1}} e^{ixω_1} dS. Φ is a Filon transform, the rest
//! Gauss-Legendre.

use crate::asymptotics::flat_pairing;
use crate::error::{Error, Result};
use crate::kuznecov::SpectralProfile;
use crate::kuznecov::test_function::unit_bump;
use crate::special::{bessel_j, gauss_legendre, spherical_bessel_seq, sphere_area, ChebyshevTable, FilonTransform};
use num_complex::Complex64;
use std::f64::consts::{E, PI};

/// Relative accuracy the quadrature must reach.
pub const MODEL_TARGET: f64 = 1e-6;

/// Separable cutoff: χ_⊥ = bump of radius `transverse` normalized to 1 at 0,
/// χ_d = 1 on [−plateau, plateau] falling smoothly to 0 at ±outer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCutoff {
    pub transverse: f64,
    pub plateau: f64,
    pub outer: f64,
}

impl Default for ModelCutoff {
    fn default() -> Self {
        ModelCutoff {
            transverse: 0.3,
            plateau: 0.8,
            outer: 0.95,
        }
    }
}

fn smooth_step(t: f64) -> f64 {
    let h = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        h(t) / (h(t) + h(1.0 - t))
    }
}

impl ModelCutoff {
    pub fn validate(&self) -> Result<()> {
        let ok = self.transverse > 0.0
            && self.plateau > 0.0
            && self.outer > self.plateau
            && self.transverse.powi(2) + self.outer.powi(2) < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("cutoff {self:?} is not supported in the unit ball")))
        }
    }

    pub fn transverse_value(&self, r: f64) -> f64 {
        E * unit_bump(r / self.transverse)
    }

    pub fn normal_value(&self, s: f64) -> f64 {
        smooth_step((self.outer - s.abs()) / (self.outer - self.plateau))
    }
}

/// χ_d ψ̂ as a profile.
struct Windowed<'a> {
    cutoff: ModelCutoff,
    profile: &'a dyn SpectralProfile,
}

impl SpectralProfile for Windowed<'_> {
    fn hat(&self, s: f64) -> f64 {
        self.cutoff.normal_value(s) * self.profile.hat(s)
    }
    fn hat_support(&self) -> (f64, f64) {
        let (lo, hi) = self.profile.hat_support();
        (lo.max(-self.cutoff.outer), hi.min(self.cutoff.outer))
    }
    fn hat_kinks(&self) -> Vec<f64> {
        let (lo, hi) = self.hat_support();
        self.profile.hat_kinks().into_iter().filter(|k| *k > lo && *k < hi).collect()
    }
    fn label(&self) -> String {
        format!("windowed({})", self.profile.label())
    }
}

fn breaks_of(w: &Windowed) -> Result<Vec<f64>> {
    let (lo, hi) = w.hat_support();
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Invalid(format!("{} has empty or unbounded support", w.profile.label())));
    }
    let c = w.cutoff;
    let mut pts = vec![lo, hi];
    pts.extend(w.hat_kinks());
    pts.extend([-c.outer, -c.plateau, c.plateau, c.outer].into_iter().filter(|p| *p > lo && *p < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = vec![pts[0]];
    for win in pts.windows(2) {
        let k = ((win[1] - win[0]) / 0.05).ceil().max(1.0) as usize;
        for i in 1..=k {
            out.push(win[0] + (win[1] - win[0]) * i as f64 / k as f64);
        }
    }
    Ok(out)
}

/// F_m(x) = ∫_{S^{m−1}} e^{ixω_1} dS for m ≥ 2, elementary when m is odd:
/// F_{2q+1}(x) = 2 (2π)^q x^{1−q} j_{q−1}(x).
fn sphere_transform(m: usize, x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-8 {
        return sphere_area(m - 1);
    }
    if m % 2 == 1 {
        let q = (m - 1) / 2;
        let j = spherical_bessel_seq(q - 1, x)[q - 1];
        2.0 * (2.0 * PI).powi(q as i32) * x.powi(1 - q as i32) * j
    } else {
        let nu = (m as f64 - 2.0) / 2.0;
        (2.0 * PI).powf(m as f64 / 2.0) * x.powf(-nu) * bessel_j(nu, x).expect("order and argument in range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelIntegral {
    pub lambda: f64,
    pub value: Complex64,
    /// Gap between two quadrature resolutions.
    pub error: f64,
}

struct Prepared {
    n: usize,
    d: usize,
    cutoff: ModelCutoff,
    phi: FilonTransform,
    filon_tail: f64,
    support_radius: f64,
}

impl Prepared {
    fn new(n: usize, d: usize, cutoff: ModelCutoff, profile: &dyn SpectralProfile) -> Result<Self> {
        if d == 0 || d >= n {
            return Err(Error::Invalid(format!("need 1 <= d < n, got n={n}, d={d}")));
        }
        cutoff.validate()?;
        let w = Windowed { cutoff, profile };
        let breaks = breaks_of(&w)?;
        let (lo, hi) = w.hat_support();
        let phi = FilonTransform::new(&breaks, 36, |s| w.hat(s));
        Ok(Prepared {
            n,
            d,
            cutoff,
            filon_tail: phi.tail_ratio(),
            phi,
            support_radius: lo.abs().max(hi.abs()),
        })
    }

    /// B(k) by Gauss-Legendre in |y'|.
    fn transverse(&self, k: f64) -> f64 {
        let (n, d) = (self.n, self.d);
        if d == 1 {
            return sphere_area(n - 2);
        }
        let r1 = self.cutoff.transverse;
        let panels = (k * r1 / 3.0).ceil() as usize + 2;
        let rule = gauss_legendre(32);
        let mut s = 0.0;
        for p in 0..panels {
            let a = r1 * p as f64 / panels as f64;
            let b = r1 * (p + 1) as f64 / panels as f64;
            s += rule.integrate(a, b, |u| {
                self.cutoff.transverse_value(u) * u.powi(d as i32 - 2) * sphere_transform(n - 1, k * u)
            });
        }
        sphere_area(d - 2) * s
    }

    fn transverse_table(&self, kmax: f64) -> ChebyshevTable {
        ChebyshevTable::new(kmax, 2.0, 24, |k| self.transverse(k))
    }

    fn integrate(&self, lambda: f64, table: &ChebyshevTable, refine: bool) -> Complex64 {
        let phase = lambda * (0.5 * self.support_radius + self.cutoff.transverse);
        let base = (phase / 3.0).ceil() as usize + 4;
        let (panels, order) = if refine { (base * 3 / 2 + 2, 24) } else { (base, 20) };
        let rule = gauss_legendre(order);
        let mut s = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let a = p as f64 / panels as f64;
            let b = (p + 1) as f64 / panels as f64;
            s += rule.integrate_complex(a, b, |rho| {
                let phi = self.phi.transform(-0.5 * lambda * rho * rho);
                phi * rho.powi(self.n as i32 - 2) * table.eval(lambda * rho)
            });
        }
        s
    }
}

pub fn model_integral(n: usize, d: usize, lambda: f64, cutoff: &ModelCutoff, profile: &dyn SpectralProfile) -> Result<ModelIntegral> {
    model_integral_ladder(n, d, &[lambda], cutoff, profile).map(|mut v| v.remove(0))
}

/// Model integral at each λ; errors if any value misses [`MODEL_TARGET`].
pub fn model_integral_ladder(
    n: usize,
    d: usize,
    lambdas: &[f64],
    cutoff: &ModelCutoff,
    profile: &dyn SpectralProfile,
) -> Result<Vec<ModelIntegral>> {
    let prep = Prepared::new(n, d, *cutoff, profile)?;
    if prep.filon_tail > 1e-8 {
        return Err(Error::Accuracy {
            target: 1e-8,
            achieved: prep.filon_tail,
        });
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Invalid(format!("lambda must be positive, got {bad}")));
    }
    let kmax = lambdas.iter().fold(1.0f64, |m, l| m.max(*l));
    let table = prep.transverse_table(kmax);
    if table.tail_ratio() > 1e-10 {
        return Err(Error::Accuracy {
            target: 1e-10,
            achieved: table.tail_ratio(),
        });
    }
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let coarse = prep.integrate(lambda, &table, false);
        let fine = prep.integrate(lambda, &table, true);
        let error = (fine - coarse).norm();
        if error > MODEL_TARGET * fine.norm() {
            return Err(Error::Accuracy {
                target: MODEL_TARGET,
                achieved: error / fine.norm(),
            });
        }
        out.push(ModelIntegral { lambda, value: fine, error });
    }
    Ok(out)
}

/// Leading stationary-phase term
/// (2π/λ)^{(n+d−2)/2} χ_⊥(0) e^{−iπα/2} ∫ χ_d ψ̂(s) (s − i0)^{−α} ds, α = (n−d)/2.
pub fn model_prediction(n: usize, d: usize, lambda: f64, cutoff: &ModelCutoff, profile: &dyn SpectralProfile) -> Result<Complex64> {
    if d == 0 || d >= n {
        return Err(Error::Invalid(format!("need 1 <= d < n, got n={n}, d={d}")));
    }
    cutoff.validate()?;
    let alpha = (n - d) as f64 / 2.0;
    let pairing = model_pairing(n, d, cutoff, profile)?;
    let scale = (2.0 * PI / lambda).powf((n + d - 2) as f64 / 2.0);
    Ok(pairing * Complex64::from_polar(scale, -PI * alpha / 2.0))
}

/// ∫ χ_d ψ̂(s) (s − i0)^{−(n−d)/2} ds, the λ-independent factor of the prediction.
pub fn model_pairing(n: usize, d: usize, cutoff: &ModelCutoff, profile: &dyn SpectralProfile) -> Result<Complex64> {
    let w = Windowed { cutoff: *cutoff, profile };
    let alpha = (n - d) as f64 / 2.0;
    let (value, _, direct) = flat_pairing(&w, alpha)?;
    // χ_d ψ̂ is real, so the (s − i0) pairing is the conjugate of the (s + i0) one
    Ok(direct.unwrap_or(value).conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kuznecov::{ShiftedBump, TestFunction};
    use crate::numeric::ols;

    #[test]
    fn sphere_transform_forms() {
        for m in [2usize, 3, 4, 5, 6] {
            for &x in &[1e-9, 0.3, 4.0, 37.0] {
                let want = crate::special::funk_hecke_quadrature(m, x);
                assert!((sphere_transform(m, x) - want).abs() < 1e-10 * sphere_area(m - 1), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn cutoff_shape() {
        let c = ModelCutoff::default();
        assert!(c.validate().is_ok());
        assert!((c.transverse_value(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(c.normal_value(0.5), 1.0);
        assert_eq!(c.normal_value(0.96), 0.0);
        assert!(ModelCutoff { transverse: 0.5, plateau: 0.8, outer: 0.95 }.validate().is_err());
    }

    #[test]
    fn d1_matches_direct_two_dimensional_rule() {
        // I = ∫_{B_1(R^2)} Φ(λ|x|²/2) dx for n = 3, d = 1, brute force in (x_1, x_2)
        let psi = ShiftedBump::new(0.3, 0.6).unwrap();
        let cut = ModelCutoff::default();
        let lambda = 12.0;
        let got = model_integral(3, 1, lambda, &cut, &psi).unwrap().value;
        let rule = gauss_legendre(40);
        let srule = gauss_legendre(30);
        let phi = |tau: f64| {
            (0..10)
                .map(|k| {
                    let a = 0.3 + 0.03 * k as f64;
                    srule.integrate_complex(a, a + 0.03, |s| Complex64::from_polar(psi.hat(s), -tau * s))
                })
                .sum::<Complex64>()
        };
        let mut want = Complex64::new(0.0, 0.0);
        let m = 24;
        // x_1 = sin θ removes the square-root edge of the disk
        for i in 0..m {
            let (a, b) = (-0.5 * PI + PI * i as f64 / m as f64, -0.5 * PI + PI * (i + 1) as f64 / m as f64);
            for (th, wt) in rule.mapped(a, b) {
                let (x1, h) = (th.sin(), th.cos());
                let w1 = wt * h;
                for j in 0..m {
                    let (c, e) = (-h + 2.0 * h * j as f64 / m as f64, -h + 2.0 * h * (j + 1) as f64 / m as f64);
                    for (x2, w2) in rule.mapped(c, e) {
                        want += phi(0.5 * lambda * (x1 * x1 + x2 * x2)) * (w1 * w2);
                    }
                }
            }
        }
        assert!((got - want).norm() < 1e-8 * want.norm(), "got={got} want={want}");
    }

    #[test]
    fn scaling_slope_three_one() {
        let psi = TestFunction::fejer(1.0).unwrap();
        let cut = ModelCutoff::default();
        let lams = crate::numeric::geometric_grid(20.0, 200.0, 9).unwrap();
        let v = model_integral_ladder(3, 1, &lams, &cut, &psi).unwrap();
        let x: Vec<f64> = lams.iter().map(|l| l.ln()).collect();
        let y: Vec<f64> = v.iter().map(|m| m.value.norm().ln()).collect();
        let (_, slope, _, _) = ols(&x, &y).unwrap();
        assert!((slope + 1.0).abs() < 0.1, "slope={slope}");
    }

    #[test]
    fn away_from_zero_matches_prediction() {
        let psi = ShiftedBump::new(0.3, 0.6).unwrap();
        let cut = ModelCutoff::default();
        for (n, d) in [(3, 1), (4, 2), (3, 2)] {
            let lam = 150.0;
            let got = model_integral(n, d, lam, &cut, &psi).unwrap().value;
            let want = model_prediction(n, d, lam, &cut, &psi).unwrap();
            let rel = (got - want).norm() / want.norm();
            assert!(rel < 0.05, "({n},{d}) rel={rel}");
        }
    }
}
