//! Hadamard transport coefficients for zonal amplitudes on the round sphere
//! and in flat space, and the exact wave kernel e^{itA} of the sphere.
//!
//! With W_j = (4i)^{−j} V_j the transport equations become
//!
//! V_0 = Θ^{−1/2},  V_{j+1}(r) = Θ^{−1/2}(r) ∫_0^1 s^j Θ^{1/2}(sr) ΔV_j(sr) ds,
//!
//! where Δ acts on zonal functions as f'' + (J'/J) f'. The V_j are carried
//! as even Chebyshev series on [−r_max, r_max], so r = 0 sits mid-interval.

use crate::error::{Error, Result};
use crate::special::{gauss_legendre, sphere_area, Chebyshev};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

const DEGREE: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    RoundSphere(usize),
    Flat(usize),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::RoundSphere(n) => write!(f, "sphere:{n}"),
            Metric::Flat(n) => write!(f, "flat:{n}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, dim) = s
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("metric '{s}' should look like sphere:3 or flat:3")))?;
        let n: usize = dim
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad dimension in metric '{s}'")))?;
        if n == 0 {
            return Err(Error::Invalid("metric dimension must be positive".into()));
        }
        match kind.trim() {
            "sphere" => Ok(Metric::RoundSphere(n)),
            "flat" => Ok(Metric::Flat(n)),
            other => Err(Error::Invalid(format!("unknown metric kind '{other}'"))),
        }
    }
}

/// cot r − 1/r without cancellation near 0.
fn cot_minus_inverse(r: f64) -> f64 {
    if r.abs() < 1e-2 {
        let r2 = r * r;
        -r / 3.0 * (1.0 + r2 / 15.0 * (1.0 + 2.0 * r2 / 63.0))
    } else {
        1.0 / r.tan() - 1.0 / r
    }
}

impl Metric {
    pub fn dim(&self) -> usize {
        match *self {
            Metric::RoundSphere(n) | Metric::Flat(n) => n,
        }
    }

    /// Θ(r): J(r) = r^{n−1} Θ(r).
    pub fn theta(&self, r: f64) -> f64 {
        match *self {
            Metric::Flat(_) => 1.0,
            Metric::RoundSphere(n) => {
                let q = if r.abs() < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
                q.powi(n as i32 - 1)
            }
        }
    }

    /// Θ'/Θ.
    pub fn log_theta_prime(&self, r: f64) -> f64 {
        match *self {
            Metric::Flat(_) => 0.0,
            Metric::RoundSphere(n) => (n as f64 - 1.0) * cot_minus_inverse(r),
        }
    }

    /// J'/J, the radial part of the Laplacian on zonal functions.
    fn mean_curvature(&self, r: f64) -> f64 {
        (self.dim() as f64 - 1.0) / r + self.log_theta_prime(r)
    }

    fn check_radius(&self, r_max: f64) -> Result<()> {
        if let Metric::RoundSphere(_) = self {
            if r_max >= PI {
                return Err(Error::ConjugatePoint(r_max));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardCoefficients {
    pub metric: Metric,
    pub j_max: usize,
    pub r_grid: Vec<f64>,
    /// w[j][i] = W_j(r_grid[i]).
    pub w: Vec<Vec<Complex64>>,
    /// max |W_0 − Θ^{−1/2}| / Θ^{−1/2} over the grid.
    pub w0_residual: f64,
    /// max |Θ'/(2Θ) W_0 + W_0'| over the grid relative to sup |W_0'|, with W_0'
    /// from the Chebyshev series.
    pub w0_transport_residual: f64,
    /// For each j ≥ 1, the residual of the j-th transport equation relative
    /// to sup |ΔW_{j−1}| on the grid.
    pub transport_residuals: Vec<f64>,
}

impl HadamardCoefficients {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r");
        for j in 0..=self.j_max {
            s.push_str(&format!(",re_w{j},im_w{j}"));
        }
        s.push('\n');
        for (i, r) in self.r_grid.iter().enumerate() {
            s.push_str(&crate::numeric::fmt17(*r));
            for j in 0..=self.j_max {
                let v = self.w[j][i];
                s.push_str(&format!(",{},{}", crate::numeric::fmt17(v.re), crate::numeric::fmt17(v.im)));
            }
            s.push('\n');
        }
        s
    }
}

fn laplacian(metric: &Metric, dv: &Chebyshev, ddv: &Chebyshev, r: f64) -> f64 {
    if r.abs() < 1e-6 {
        // V'(r)/r → V''(0) for even V
        return metric.dim() as f64 * ddv.eval(r);
    }
    ddv.eval(r) + metric.mean_curvature(r) * dv.eval(r)
}

pub fn hadamard_transport(metric: Metric, j_max: usize, r_grid: &[f64]) -> Result<HadamardCoefficients> {
    if r_grid.is_empty() {
        return Err(Error::Invalid("empty radius grid".into()));
    }
    if r_grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::Invalid("radius grid must lie in (0, r_max)".into()));
    }
    let r_max = r_grid.iter().fold(0.0f64, |m, r| m.max(*r));
    metric.check_radius(r_max)?;
    let n_grid = r_grid.len();

    if let Metric::Flat(_) = metric {
        // Θ ≡ 1 and the constant W_0 has vanishing Laplacian
        let mut w = vec![vec![Complex64::new(1.0, 0.0); n_grid]];
        w.extend((0..j_max).map(|_| vec![Complex64::new(0.0, 0.0); n_grid]));
        return Ok(HadamardCoefficients {
            metric,
            j_max,
            r_grid: r_grid.to_vec(),
            w,
            w0_residual: 0.0,
            w0_transport_residual: 0.0,
            transport_residuals: vec![0.0; j_max],
        });
    }

    let inv_sqrt_theta = |r: f64| metric.theta(r).powf(-0.5);
    let mut series = vec![Chebyshev::fit(-r_max, r_max, DEGREE, inv_sqrt_theta)];
    // ΔV_j(sr) steepens toward s = 1 as r nears the conjugate point
    let mut s_breaks: Vec<f64> = (0..=14).map(|k| 1.0 - 0.5f64.powi(k)).collect();
    s_breaks[0] = 0.0;
    s_breaks.push(1.0);
    let rule = gauss_legendre(24);
    for j in 0..j_max {
        let v = &series[j];
        let dv = v.derivative();
        let ddv = dv.derivative();
        let next = Chebyshev::fit(-r_max, r_max, DEGREE, |r| {
            let r = r.abs();
            let mut s = 0.0;
            for win in s_breaks.windows(2) {
                s += rule.integrate(win[0], win[1], |s| {
                    let rho = s * r;
                    s.powi(j as i32) * metric.theta(rho).sqrt() * laplacian(&metric, &dv, &ddv, rho)
                });
            }
            inv_sqrt_theta(r) * s
        });
        series.push(next);
    }

    let mut w0_residual = 0.0f64;
    let mut w0_worst = 0.0f64;
    let mut w0_scale = 0.0f64;
    let d0 = series[0].derivative();
    for &r in r_grid {
        let exact = inv_sqrt_theta(r);
        w0_residual = w0_residual.max((series[0].eval(r) - exact).abs() / exact);
        let b = d0.eval(r);
        w0_worst = w0_worst.max((0.5 * metric.log_theta_prime(r) * series[0].eval(r) + b).abs());
        w0_scale = w0_scale.max(b.abs());
    }
    let w0_transport_residual = if w0_scale > 0.0 { w0_worst / w0_scale } else { w0_worst };

    let mut transport_residuals = Vec::with_capacity(j_max);
    for j in 0..j_max {
        let (v, u) = (&series[j], &series[j + 1]);
        let dv = v.derivative();
        let ddv = dv.derivative();
        let du = u.derivative();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for &r in r_grid {
            let lap = laplacian(&metric, &dv, &ddv, r);
            let lhs = r * (((j + 1) as f64 / r + 0.5 * metric.log_theta_prime(r)) * u.eval(r) + du.eval(r));
            worst = worst.max((lhs - lap).abs());
            scale = scale.max(lap.abs());
        }
        transport_residuals.push(if scale > 0.0 { worst / scale } else { worst });
    }

    let w = series
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let f = Complex64::new(0.0, 4.0).powi(-(j as i32));
            r_grid.iter().map(|&r| f * s.eval(r)).collect()
        })
        .collect();
    Ok(HadamardCoefficients {
        metric,
        j_max,
        r_grid: r_grid.to_vec(),
        w,
        w0_residual,
        w0_transport_residual,
        transport_residuals,
    })
}

/// Kernel of e^{itA} on S^n, A the degree operator, for Im t > 0:
/// (1 − w²) / (|S^n| (1 − 2w cos r + w²)^{(n+1)/2}),  w = e^{it}.
///
/// The branch is fixed by factoring 1 − 2w cos r + w² = (1 − w e^{ir})(1 − w e^{−ir}),
/// each factor having positive real part. In terms of t this is
/// −(2i sin t / |S^n|) e^{−it(n−1)/2} (2cos t − 2cos r)^{−(n+1)/2}; the phase
/// comes from A = √(−Δ + (n−1)²/4) − (n−1)/2.
pub fn sphere_wave_kernel(n: usize, t: Complex64, r: f64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Invalid("sphere dimension must be positive".into()));
    }
    if !(t.im > 0.0) {
        return Err(Error::Range(format!("wave kernel needs Im t > 0, got {t}")));
    }
    let w = (Complex64::i() * t).exp();
    let e = Complex64::from_polar(1.0, r);
    let p = -(n as f64 + 1.0) / 2.0;
    let one = Complex64::new(1.0, 0.0);
    let denom = (one - w * e).powf(p) * (one - w * e.conj()).powf(p);
    Ok((one - w * w) * denom / sphere_area(n))
}

/// Σ_N e^{iNt} Π_N(r): the same kernel as a sum over spherical-harmonic
/// degrees, with the zonal projector Π_N = (N+α)/α C_N^α(cos r)/|S^n|, α = (n−1)/2.
pub fn sphere_wave_mode_sum(n: usize, t: Complex64, r: f64, terms: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Invalid("sphere dimension must be positive".into()));
    }
    if !(t.im > 0.0) {
        return Err(Error::Range(format!("mode sum needs Im t > 0, got {t}")));
    }
    let w = (Complex64::i() * t).exp();
    let x = r.cos();
    let area = sphere_area(n);
    let mut total = Complex64::new(0.0, 0.0);
    let mut wn = Complex64::new(1.0, 0.0);
    if n == 1 {
        for k in 0..terms {
            let m = if k == 0 { 1.0 } else { 2.0 };
            total += wn * m * (k as f64 * r).cos();
            wn *= w;
        }
        return Ok(total / area);
    }
    let alpha = (n as f64 - 1.0) / 2.0;
    let (mut c_prev, mut c) = (0.0, 1.0);
    for k in 0..terms {
        let kf = k as f64;
        total += wn * ((kf + alpha) / alpha * c);
        wn *= w;
        let c_next = (2.0 * (kf + alpha) * x * c - (kf + 2.0 * alpha - 1.0) * c_prev) / (kf + 1.0);
        c_prev = c;
        c = c_next;
    }
    Ok(total / area)
}

/// Terms needed for the mode sum to settle below double precision.
pub fn mode_sum_terms(n: usize, t: Complex64) -> usize {
    let decay = t.im.max(1e-3);
    ((40.0 + 2.0 * n as f64 * (1.0 / decay).ln().max(0.0) + 3.0 * n as f64) / decay).ceil() as usize + 16
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..200).map(|i| 0.05 + (PI - 0.15) * i as f64 / 199.0).collect()
    }

    #[test]
    fn parse_metric() {
        assert_eq!("sphere:3".parse::<Metric>().unwrap(), Metric::RoundSphere(3));
        assert_eq!("flat:2".parse::<Metric>().unwrap(), Metric::Flat(2));
        assert!("torus:2".parse::<Metric>().is_err());
        assert_eq!(Metric::RoundSphere(4).to_string(), "sphere:4");
    }

    #[test]
    fn flat_is_trivial() {
        let h = hadamard_transport(Metric::Flat(3), 3, &grid()).unwrap();
        assert!(h.w[0].iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        for j in 1..=3 {
            assert!(h.w[j].iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn sphere_w0_and_transport() {
        for n in [2, 3, 4] {
            let h = hadamard_transport(Metric::RoundSphere(n), 2, &grid()).unwrap();
            assert!(h.w0_residual < 1e-10, "n={n} {}", h.w0_residual);
            assert!(h.w0_transport_residual < 1e-10, "n={n} {}", h.w0_transport_residual);
            for (j, r) in h.transport_residuals.iter().enumerate() {
                assert!(*r < 1e-8, "n={n} j={j} residual={r}");
            }
        }
    }

    #[test]
    fn s3_first_coefficient() {
        // on S^3, Δ(g/sin r) = (g'' + g)/sin r, so ΔV_0 = V_0 and Θ^{1/2} V_0 = 1
        let g = grid();
        let h = hadamard_transport(Metric::RoundSphere(3), 1, &g).unwrap();
        for (i, &r) in g.iter().enumerate() {
            let v1 = h.w[1][i] * Complex64::new(0.0, 4.0);
            assert!((v1.re - r / r.sin()).abs() < 1e-8 * r / r.sin(), "r={r}");
            assert!(v1.im.abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_point_guard() {
        let e = hadamard_transport(Metric::RoundSphere(2), 1, &[0.5, PI]).unwrap_err();
        assert!(matches!(e, Error::ConjugatePoint(_)));
        assert!(hadamard_transport(Metric::Flat(2), 1, &[0.5, 4.0]).is_ok());
        assert!(hadamard_transport(Metric::RoundSphere(2), 1, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn circle_kernel_matches_geometric_series() {
        let t = Complex64::new(0.7, 0.5);
        for &r in &[0.0, 0.4, 2.0, 3.1] {
            let k = sphere_wave_kernel(1, t, r).unwrap();
            let s = sphere_wave_mode_sum(1, t, r, 10_000).unwrap();
            assert!((k - s).norm() < 1e-8, "r={r} {k} {s}");
        }
    }

    #[test]
    fn sphere_kernel_matches_mode_sum() {
        for n in [2, 3, 4, 5] {
            for &(re, im) in &[(0.3, 0.3), (2.5, 0.3), (-1.2, 0.8)] {
                let t = Complex64::new(re, im);
                for &r in &[0.1, 1.0, 2.9] {
                    let k = sphere_wave_kernel(n, t, r).unwrap();
                    let s = sphere_wave_mode_sum(n, t, r, mode_sum_terms(n, t)).unwrap();
                    assert!((k - s).norm() < 1e-6 * k.norm().max(1.0), "n={n} t={t} r={r} {k} {s}");
                }
            }
        }
    }

    #[test]
    fn kernel_even_in_r_and_trig_form() {
        let t = Complex64::new(1.1, 0.4);
        let a = sphere_wave_kernel(3, t, 0.7).unwrap();
        let b = sphere_wave_kernel(3, t, -0.7).unwrap();
        assert!((a - b).norm() < 1e-14 * a.norm());
        // odd n: the power is an integer, so the trig form has no branch ambiguity
        let trig = -Complex64::new(0.0, 2.0) * t.sin() / sphere_area(3)
            * (-Complex64::i() * t).exp()
            * (2.0 * t.cos() - 2.0 * 0.7f64.cos()).powi(-2);
        assert!((a - trig).norm() < 1e-12 * a.norm());
        assert!(sphere_wave_kernel(3, Complex64::new(1.0, 0.0), 0.5).is_err());
    }
}
