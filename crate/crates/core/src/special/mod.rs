//! Special functions and quadrature, written from scratch.

pub mod bessel;
pub mod chebyshev;
pub mod gamma;
pub mod legendre;
pub mod quadrature;
pub mod regularized;

pub use bessel::{bessel_j, spherical_bessel_seq};
pub use chebyshev::{Chebyshev, ChebyshevTable};
pub use gamma::{gamma, ln_gamma, sphere_area};
pub use legendre::{assoc_legendre, assoc_legendre_normalized, gegenbauer, gegenbauer_norm_sq, orthonormal_gegenbauer_seq};
pub use quadrature::{gauss_legendre, FilonTransform, QuadratureRule};
pub use regularized::{regularized_pairing, Compact, Extrapolated, RegularizedPower, Side};

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// ∫_{S^{k−1}} e^{i x ω_1} dS(ω) by Funk-Hecke reduction to one angle,
/// |S^{k−2}| ∫_0^π cos(x cos θ) sin^{k−2} θ dθ. For k = 1 the sphere is {±1}.
pub fn funk_hecke_quadrature(k: usize, x: f64) -> f64 {
    assert!(k >= 1);
    if k == 1 {
        return 2.0 * x.cos();
    }
    let panels = (x.abs() / 3.0).ceil() as usize + 4;
    let rule = gauss_legendre(24);
    let mut s = 0.0;
    for p in 0..panels {
        let a = PI * p as f64 / panels as f64;
        let b = PI * (p + 1) as f64 / panels as f64;
        s += rule.integrate(a, b, |t| (x * t.cos()).cos() * t.sin().powi(k as i32 - 2));
    }
    sphere_area(k - 2) * s
}

/// (2π)^{k/2} x^{−(k−2)/2} J_{(k−2)/2}(x), the Bessel form of the same
/// integral (k ≥ 2), with the x → 0 limit |S^{k−1}|.
pub fn funk_hecke_closed_form(k: usize, x: f64) -> Result<f64> {
    if k < 2 {
        return Ok(2.0 * x.cos());
    }
    let nu = (k as f64 - 2.0) / 2.0;
    if x.abs() < 1e-8 {
        return Ok(sphere_area(k - 1));
    }
    let x = x.abs();
    Ok((2.0 * PI).powf(k as f64 / 2.0) * x.powf(-nu) * bessel_j(nu, x)?)
}

/// Both sides of ∫_{S^{n−1}} e^{2πi r ω_1} dS(ω) = 2π r^{−(n−2)/2} J_{(n−2)/2}(2πr).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub quadrature: f64,
    pub closed_form: f64,
}

pub fn sphere_plane_wave_integral(n: usize, r: f64) -> Result<PlaneWave> {
    if n < 2 {
        return Err(Error::Invalid(format!("sphere_plane_wave_integral needs n >= 2, got {n}")));
    }
    if !(r >= 0.0) {
        return Err(Error::Invalid(format!("radius must be nonnegative, got {r}")));
    }
    let x = 2.0 * PI * r;
    Ok(PlaneWave {
        quadrature: funk_hecke_quadrature(n, x),
        closed_form: funk_hecke_closed_form(n, x)?,
    })
}
