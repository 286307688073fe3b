//! Bessel functions of the first kind for real order, and spherical Bessel sequences.

use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Largest order and argument accepted by [`bessel_j`].
pub const MAX_ORDER: f64 = 200.0;
pub const MAX_ARG: f64 = 1.0e5;

/// J_ν(x) for ν ≥ 0, x ≥ 0.
///
/// Ascending series for small x, Miller backward recurrence normalized by a
/// Neumann series otherwise, Hankel expansion once x ≫ ν².
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu.is_finite() && x.is_finite()) || nu < 0.0 || x < 0.0 {
        return Err(Error::Range(format!("bessel_j(nu={nu}, x={x})")));
    }
    if nu > MAX_ORDER || x > MAX_ARG {
        return Err(Error::Range(format!(
            "bessel_j(nu={nu}, x={x}) outside nu <= {MAX_ORDER}, x <= {MAX_ARG}"
        )));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x <= 2.0 || x * x <= 0.5 * (nu + 1.0) {
        return Ok(series(nu, x));
    }
    if x > 60.0 && x > 2.0 * nu * nu {
        return Ok(hankel(nu, x));
    }
    Ok(miller(nu, x))
}

fn series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let lead = (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp();
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn miller(nu: f64, x: f64) -> f64 {
    let m = nu.floor() as usize;
    let nu0 = nu - m as f64;
    let top = (m as f64).max(x.ceil());
    let start = (top + 40.0 + 15.0 * top.cbrt()) as usize;
    let start = start + (start & 1);

    // backward recurrence J_{k-1} = 2(nu0+k)/x J_k - J_{k+1}
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut target = 0.0;
    // Neumann weights c_k = (nu0 + 2k) Γ(nu0 + k) / k!
    let mut norm = 0.0;
    let weight = |k: usize| -> f64 {
        if nu0 == 0.0 {
            if k == 0 {
                1.0
            } else {
                2.0
            }
        } else {
            let kf = k as f64;
            (nu0 + 2.0 * kf) * (ln_gamma(nu0 + kf) - ln_gamma(kf + 1.0)).exp()
        }
    };
    let mut k = start;
    loop {
        if k == m {
            target = cur;
        }
        if k % 2 == 0 {
            norm += weight(k / 2) * cur;
        }
        if k == 0 {
            break;
        }
        let prev = 2.0 * (nu0 + k as f64) / x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            target *= 1e-250;
            norm *= 1e-250;
        }
    }
    let scale = if nu0 == 0.0 {
        1.0
    } else {
        (nu0 * (0.5 * x).ln()).exp()
    };
    target * scale / norm
}

/// Spherical Bessel values j_0(θ), …, j_kmax(θ) for θ ≥ 0.
pub fn spherical_bessel_seq(kmax: usize, theta: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    spherical_bessel_into(theta, &mut out);
    out
}

/// Fills `out[k] = j_k(θ)`; θ may be negative, using j_k(−θ) = (−1)^k j_k(θ).
pub fn spherical_bessel_into(theta: f64, out: &mut [f64]) {
    let kmax = out.len() - 1;
    let x = theta.abs();
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    let j0 = if x < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    let j1 = if x < 1e-3 {
        x / 3.0 * (1.0 - x * x / 10.0)
    } else {
        (x.sin() / x - x.cos()) / x
    };
    if x > kmax as f64 {
        out[0] = j0;
        if kmax >= 1 {
            out[1] = j1;
        }
        for k in 1..kmax {
            out[k + 1] = (2 * k + 1) as f64 / x * out[k] - out[k - 1];
        }
    } else {
        let start = kmax + 20 + (x as usize) + (10.0 * (kmax as f64 + 1.0).sqrt()) as usize;
        let mut next = 0.0;
        let mut cur = 1e-30;
        let mut sumsq = 0.0;
        let mut k = start;
        loop {
            if k <= kmax {
                out[k] = cur;
            }
            sumsq += (2 * k + 1) as f64 * cur * cur;
            if k == 0 {
                break;
            }
            let prev = (2 * k + 1) as f64 / x * cur - next;
            next = cur;
            cur = prev;
            k -= 1;
            if cur.abs() > 1e100 {
                let s = 1e-100;
                cur *= s;
                next *= s;
                sumsq *= s * s;
                for v in out.iter_mut() {
                    *v *= s;
                }
            }
        }
        let mut scale = 1.0 / sumsq.sqrt();
        let reference = if j0.abs() >= j1.abs() {
            (j0, out[0])
        } else {
            (j1, out[1])
        };
        if reference.0 * reference.1 < 0.0 {
            scale = -scale;
        }
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
    if theta < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an independent arbitrary-precision evaluation
    const TABLE: &[(f64, f64, f64)] = &[
        (0.0, 1.0, 0.765_197_686_557_966_55),
        (1.0, 2.5, 0.497_094_102_464_274_04),
        (0.0, 10.0, -0.245_935_764_451_348_34),
        (2.5, 10.0, 0.196_658_483_581_818_41),
        (5.0, 0.3, 6.304_432_633_771_071_1e-7),
        (30.0, 50.0, 0.048_434_257_245_509_417),
        (0.5, 200.0, -0.049_270_523_842_854_475),
        (10.0, 150.0, -0.020_612_788_945_218_587),
        (1.5, 3000.0, 0.014_214_131_752_834_737),
        (0.0, 0.01, 0.999_975_000_156_249_57),
    ];

    #[test]
    fn reference_values() {
        for &(nu, x, want) in TABLE {
            let got = bessel_j(nu, x).unwrap();
            assert!((got - want).abs() < 1e-12, "J_{nu}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn half_order_closed_form() {
        let x = 1.0f64;
        let want = (2.0 / (PI * x)).sqrt() * x.sin();
        assert!((bessel_j(0.5, x).unwrap() - want).abs() < 1e-14);
        for &x in &[0.7, 3.0, 17.0, 123.0] {
            let j = spherical_bessel_seq(3, x);
            let want = (PI / (2.0 * x)).sqrt() * bessel_j(3.5, x).unwrap();
            assert!((j[3] - want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let (mut lo, mut hi) = (2.3, 2.5);
        let f = |x: f64| bessel_j(0.0, x).unwrap();
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((lo - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn envelope() {
        assert!(bessel_j(-1.0, 1.0).is_err());
        assert!(bessel_j(1.0, 1e7).is_err());
        assert_eq!(bessel_j(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn spherical_small_argument() {
        let j = spherical_bessel_seq(5, 1e-3);
        assert!((j[0] - 1.0).abs() < 1e-6);
        assert!((j[2] - 1e-6 / 15.0 * (1.0 - 1e-6 / 14.0)).abs() < 1e-20);
        let jn = spherical_bessel_seq(5, -2.0);
        let jp = spherical_bessel_seq(5, 2.0);
        assert_eq!(jn[1], -jp[1]);
        assert_eq!(jn[2], jp[2]);
    }
}
