//! Associated Legendre and Gegenbauer recurrences.

use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use std::f64::consts::PI;

fn check_unit(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Range(format!("argument {x} outside [-1, 1]")));
    }
    Ok(())
}

/// Ferrers function P_N^m(x) with the Condon-Shortley phase, forward
/// recurrence in N from the diagonal seed P_m^m = (−1)^m (2m−1)!! (1−x²)^{m/2}.
pub fn assoc_legendre(n: usize, m: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    if m > n {
        return Err(Error::Invalid(format!("assoc_legendre needs m <= N, got m={m}, N={n}")));
    }
    let s = (1.0 - x * x).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= -((2 * k + 1) as f64) * s;
    }
    if n == m {
        return Ok(pmm);
    }
    let mut p0 = pmm;
    let mut p1 = x * (2 * m + 1) as f64 * pmm;
    for l in (m + 2)..=n {
        let lf = l as f64;
        let mf = m as f64;
        let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf + mf - 1.0) * p0) / (lf - mf);
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// Orthonormal P̄_N^m(x) = sqrt((2N+1)/2 · (N−m)!/(N+m)!) P_N^m(x), so that
/// ∫_{−1}^{1} P̄_N^m P̄_{N'}^m dx = δ_{NN'}. Stable for large N and m.
pub fn assoc_legendre_normalized(n: usize, m: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    if m > n {
        return Err(Error::Invalid(format!("assoc_legendre needs m <= N, got m={m}, N={n}")));
    }
    let s2 = 1.0 - x * x;
    // P̄_m^m = (−1)^m sqrt((2m+1)!!/(2 (2m)!!)) s^m, built as a product
    let mut pmm = (0.5f64).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s2.sqrt();
    }
    if n == m {
        return Ok(pmm);
    }
    let mf = m as f64;
    let mut p0 = pmm;
    let mut p1 = x * (2.0 * mf + 3.0).sqrt() * pmm;
    for l in (m + 2)..=n {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let p2 = a * (x * p1 - b * p0);
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// Gegenbauer C_N^{(α)}(x) by the standard three-term recurrence.
pub fn gegenbauer(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut c0 = 1.0;
    let mut c1 = 2.0 * alpha * x;
    for k in 1..n {
        let kf = k as f64;
        let c2 = (2.0 * x * (kf + alpha) * c1 - (kf + 2.0 * alpha - 1.0) * c0) / (kf + 1.0);
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// ∫_{−1}^{1} C_N^{(α)}(t)² (1−t²)^{α−1/2} dt = π 2^{1−2α} Γ(N+2α) / (N! (N+α) Γ(α)²).
pub fn gegenbauer_norm_sq(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let ln = PI.ln() + (1.0 - 2.0 * alpha) * 2f64.ln() + ln_gamma(nf + 2.0 * alpha)
        - ln_gamma(nf + 1.0)
        - (nf + alpha).ln()
        - 2.0 * ln_gamma(alpha);
    ln.exp()
}

/// Values p_0(x), …, p_N(x) of the Gegenbauer polynomials orthonormal for the
/// weight (1−t²)^{α−1/2} on [−1, 1] (α > −1/2).
///
/// Uses the symmetric Jacobi recurrence t p_ν = a_{ν+1} p_{ν+1} + a_ν p_{ν−1}
/// with a_ν = ½ sqrt(ν(ν+2α−1) / ((ν+α)(ν+α−1))).
pub fn orthonormal_gegenbauer_seq(n: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    // h_0 = ∫ (1−t²)^{α−1/2} dt = sqrt(π) Γ(α+1/2) / Γ(α+1)
    let ln_h0 = 0.5 * PI.ln() + ln_gamma(alpha + 0.5) - ln_gamma(alpha + 1.0);
    let p0 = (-0.5 * ln_h0).exp();
    out.push(p0);
    if n == 0 {
        return out;
    }
    let a = |nu: usize| -> f64 {
        let v = nu as f64;
        if v + alpha - 1.0 == 0.0 {
            // α = 0 limit (Chebyshev): a_1 = 1/sqrt(2)
            return std::f64::consts::FRAC_1_SQRT_2;
        }
        0.5 * (v * (v + 2.0 * alpha - 1.0) / ((v + alpha) * (v + alpha - 1.0))).sqrt()
    };
    let mut prev = 0.0;
    let mut cur = p0;
    for nu in 0..n {
        let next = if nu == 0 {
            x * cur / a(1)
        } else {
            (x * cur - a(nu) * prev) / a(nu + 1)
        };
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::quadrature::gauss_legendre;

    #[test]
    fn legendre_spot_values() {
        assert_eq!(assoc_legendre(0, 0, 0.37).unwrap(), 1.0);
        assert!((assoc_legendre(2, 0, 0.0).unwrap() + 0.5).abs() < 1e-15);
        // P_3^1(x) = −(3/2)(5x²−1) sqrt(1−x²)
        let x: f64 = 0.3;
        let want = -1.5 * (5.0 * x * x - 1.0) * (1.0 - x * x).sqrt();
        assert!((assoc_legendre(3, 1, x).unwrap() - want).abs() < 1e-14);
        assert!(assoc_legendre(2, 3, 0.1).is_err());
        assert!(assoc_legendre(2, 1, 1.5).is_err());
    }

    #[test]
    fn normalized_matches_gram_and_unnormalized() {
        let rule = gauss_legendre(80);
        for (n1, n2, m) in [(5usize, 5usize, 3usize), (5, 7, 3), (20, 20, 11), (33, 35, 2)] {
            let g: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, w)| w * assoc_legendre_normalized(n1, m, x).unwrap() * assoc_legendre_normalized(n2, m, x).unwrap())
                .sum();
            let want = if n1 == n2 { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-12, "({n1},{n2},{m}) gram {g}");
        }
        // (5,3,0.3) against the unnormalized recurrence and factorial normalization
        let raw = assoc_legendre(5, 3, 0.3).unwrap();
        let norm = (11.0 / 2.0 * 2.0 / 40320.0f64).sqrt();
        assert!((assoc_legendre_normalized(5, 3, 0.3).unwrap() - norm * raw).abs() < 1e-13);
    }

    #[test]
    fn gegenbauer_seeds_and_series() {
        assert_eq!(gegenbauer(0, 1.3, 0.4), 1.0);
        assert!((gegenbauer(1, 1.3, 0.4) - 2.0 * 1.3 * 0.4).abs() < 1e-15);
        // explicit sum C_N^α(x) = Σ_k (−1)^k Γ(N−k+α) / (Γ(α) k! (N−2k)!) (2x)^{N−2k}
        let (n, alpha, x) = (4usize, 1.5, 0.2f64);
        let mut s = 0.0;
        for k in 0..=n / 2 {
            let lg = ln_gamma((n - k) as f64 + alpha) - ln_gamma(alpha) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - 2 * k) as f64 + 1.0);
            s += (-1f64).powi(k as i32) * lg.exp() * (2.0 * x).powi((n - 2 * k) as i32);
        }
        assert!((gegenbauer(n, alpha, x) - s).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_sequence_matches_closed_normalization() {
        for &alpha in &[0.5, 1.0, 2.5, 40.5] {
            let seq = orthonormal_gegenbauer_seq(12, alpha, 0.37);
            for (nu, v) in seq.iter().enumerate() {
                let want = gegenbauer(nu, alpha, 0.37) / gegenbauer_norm_sq(nu, alpha).sqrt();
                assert!((v - want).abs() < 1e-11 * want.abs().max(1.0), "alpha={alpha} nu={nu}");
            }
        }
    }
}
