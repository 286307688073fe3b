//! Gauss-Legendre rules, composite panels, and a Filon-type rule for
//! ∫ f(y) e^{iωy} dy with f expanded in Legendre polynomials per panel.

use super::bessel::spherical_bessel_into;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// n-point Gauss-Legendre rule on (−1, 1), Newton iteration on P_n.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        QuadratureRule {
            nodes,
            weights,
            order: n,
        }
    }

    /// ∫_a^b f with the rule mapped affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(m + h * x);
        }
        s * h
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(m + h * x) * *w;
        }
        s * h
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (m + h * x, w * h))
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * n as f64 * (n as f64 + 1.0) * if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 }
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Shared, lazily built Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(QuadratureRule::gauss_legendre(n)))
        .clone()
}

/// Composite Gauss-Legendre over consecutive breakpoints.
pub fn composite<F: FnMut(f64) -> f64>(breaks: &[f64], order: usize, mut f: F) -> f64 {
    let rule = gauss_legendre(order);
    let mut s = 0.0;
    for w in breaks.windows(2) {
        s += rule.integrate(w[0], w[1], &mut f);
    }
    s
}

/// Breakpoints lo = b_0 < … < b_k = hi refined geometrically toward `at`
/// (which must lie in [lo, hi]); the smallest cell has width `finest`.
pub fn graded_breaks(lo: f64, hi: f64, at: f64, finest: f64, ratio: f64) -> Vec<f64> {
    let mut left = vec![at];
    let mut w = finest;
    while *left.last().unwrap() > lo {
        let next = (left.last().unwrap() - w).max(lo);
        left.push(next);
        w *= ratio;
    }
    let mut right = vec![at];
    let mut w = finest;
    while *right.last().unwrap() < hi {
        let next = (right.last().unwrap() + w).min(hi);
        right.push(next);
        w *= ratio;
    }
    left.reverse();
    left.pop();
    left.extend(right);
    left.dedup();
    left
}

#[derive(Debug, Clone)]
struct FilonPanel {
    mid: f64,
    half: f64,
    coeffs: Vec<f64>,
}

/// Real amplitude f on [a, b] prepared for ∫ f(y) e^{iωy} dy at many ω.
///
/// Each panel carries the Legendre coefficients of f; the oscillatory factor
/// is then integrated exactly through ∫_{−1}^{1} P_k(t) e^{iθt} dt = 2 i^k j_k(θ).
#[derive(Debug, Clone)]
pub struct FilonTransform {
    panels: Vec<FilonPanel>,
    degree: usize,
}

impl FilonTransform {
    pub fn new<F: Fn(f64) -> f64>(breaks: &[f64], degree: usize, f: F) -> Self {
        let q = degree + 8;
        let rule = gauss_legendre(q);
        // P_k at the rule nodes
        let mut pk = vec![vec![0.0; q]; degree + 1];
        for (i, &t) in rule.nodes.iter().enumerate() {
            let mut p0 = 1.0;
            let mut p1 = t;
            pk[0][i] = 1.0;
            if degree >= 1 {
                pk[1][i] = t;
            }
            for k in 2..=degree {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
                pk[k][i] = p2;
            }
        }
        let mut panels = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let vals: Vec<f64> = rule.nodes.iter().map(|&t| f(mid + half * t)).collect();
            let coeffs = (0..=degree)
                .map(|k| {
                    let s: f64 = (0..q).map(|i| rule.weights[i] * vals[i] * pk[k][i]).sum();
                    s * (2 * k + 1) as f64 * 0.5
                })
                .collect();
            panels.push(FilonPanel { mid, half, coeffs });
        }
        FilonTransform { panels, degree }
    }

    /// ∫ f(y) e^{iωy} dy.
    pub fn transform(&self, omega: f64) -> Complex64 {
        let mut js = vec![0.0; self.degree + 1];
        let mut total = Complex64::new(0.0, 0.0);
        for p in &self.panels {
            spherical_bessel_into(omega * p.half, &mut js);
            // Σ c_k 2 i^k j_k
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, (c, j)) in p.coeffs.iter().zip(&js).enumerate() {
                let v = 2.0 * c * j;
                match k % 4 {
                    0 => re += v,
                    1 => im += v,
                    2 => re -= v,
                    _ => im -= v,
                }
            }
            let phase = Complex64::from_polar(p.half, omega * p.mid);
            total += phase * Complex64::new(re, im);
        }
        total
    }

    /// Largest trailing Legendre coefficient over all panels relative to the
    /// largest coefficient anywhere, a cheap resolution indicator.
    pub fn tail_ratio(&self) -> f64 {
        let head = self
            .panels
            .iter()
            .flat_map(|p| p.coeffs.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if head == 0.0 {
            return 0.0;
        }
        let tail = self
            .panels
            .iter()
            .flat_map(|p| p.coeffs[p.coeffs.len().saturating_sub(2)..].iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        tail / head
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_and_exactness() {
        for n in [1usize, 2, 5, 16, 33, 128, 400] {
            let r = QuadratureRule::gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            for deg in 0..(2 * n).min(60) {
                let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-12, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn filon_matches_closed_form() {
        // ∫_0^2 y^2 e^{iωy} dy
        let f = FilonTransform::new(&[0.0, 0.5, 2.0], 6, |y| y * y);
        for &w in &[0.0, 0.3, 7.0, 250.0] {
            let got = f.transform(w);
            let want = if w == 0.0 {
                Complex64::new(8.0 / 3.0, 0.0)
            } else {
                let i = Complex64::i();
                let e = (i * w * 2.0).exp();
                e * (4.0 / (i * w) + 4.0 / (w * w) - 2.0 / (i * w * w * w)) + 2.0 / (i * w * w * w)
            };
            assert!((got - want).norm() < 1e-12, "w={w} got={got} want={want}");
        }
    }

    #[test]
    fn graded_breaks_cover_interval() {
        let b = graded_breaks(-1.0, 3.0, 0.0, 1e-3, 2.0);
        assert_eq!(b[0], -1.0);
        assert_eq!(*b.last().unwrap(), 3.0);
        assert!(b.contains(&0.0));
        assert!(b.windows(2).all(|w| w[1] > w[0]));
    }
}
