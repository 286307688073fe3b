//! Chebyshev series on an interval: fit at first-kind nodes, Clenshaw
//! evaluation, term-by-term differentiation.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolant of degree `degree` at the first-kind nodes of [a, b].
    pub fn fit<F: FnMut(f64) -> f64>(a: f64, b: f64, degree: usize, mut f: F) -> Self {
        let m = degree + 1;
        let vals: Vec<f64> = (0..m)
            .map(|k| {
                let t = (PI * (k as f64 + 0.5) / m as f64).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * t)
            })
            .collect();
        let coeffs = (0..m)
            .map(|j| {
                let s: f64 = vals
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / m as f64).cos())
                    .sum();
                s * if j == 0 { 1.0 } else { 2.0 } / m as f64
            })
            .collect();
        Chebyshev { a, b, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len();
        if n <= 1 {
            return Chebyshev {
                a: self.a,
                b: self.b,
                coeffs: vec![0.0],
            };
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let s = 2.0 / (self.b - self.a);
        Chebyshev {
            a: self.a,
            b: self.b,
            coeffs: d.into_iter().map(|c| c * s).collect(),
        }
    }

    /// Largest of the last two coefficients relative to the largest one.
    pub fn tail_ratio(&self) -> f64 {
        let head = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let n = self.coeffs.len();
        let tail = self.coeffs[n.saturating_sub(2)..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if head == 0.0 {
            0.0
        } else {
            tail / head
        }
    }
}

/// Piecewise Chebyshev table on [0, hi] with equal panels.
#[derive(Debug, Clone)]
pub struct ChebyshevTable {
    width: f64,
    panels: Vec<Chebyshev>,
}

impl ChebyshevTable {
    pub fn new<F: FnMut(f64) -> f64>(hi: f64, width: f64, degree: usize, mut f: F) -> Self {
        let count = (hi / width).ceil().max(1.0) as usize;
        let panels = (0..count)
            .map(|i| Chebyshev::fit(i as f64 * width, (i + 1) as f64 * width, degree, &mut f))
            .collect();
        ChebyshevTable { width, panels }
    }

    pub fn hi(&self) -> f64 {
        self.width * self.panels.len() as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = ((x / self.width) as usize).min(self.panels.len() - 1);
        self.panels[i].eval(x)
    }

    /// Worst panel tail ratio, measured against the largest coefficient of the table.
    pub fn tail_ratio(&self) -> f64 {
        let head = self
            .panels
            .iter()
            .flat_map(|p| p.coeffs.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        let tail = self
            .panels
            .iter()
            .flat_map(|p| p.coeffs[p.coeffs.len().saturating_sub(2)..].iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if head == 0.0 {
            0.0
        } else {
            tail / head
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_eval_derivative() {
        let c = Chebyshev::fit(0.5, 2.5, 30, |x| (3.0 * x).sin() * x.exp());
        let d = c.derivative();
        for &x in &[0.5, 0.77, 1.9, 2.5] {
            assert!((c.eval(x) - (3.0 * x).sin() * x.exp()).abs() < 1e-12);
            let want = (3.0 * (3.0 * x).cos() + (3.0 * x).sin()) * x.exp();
            assert!((d.eval(x) - want).abs() < 1e-10, "x={x}");
        }
        assert!(c.tail_ratio() < 1e-12);
        let k = Chebyshev::fit(0.0, 1.0, 5, |_| 2.0);
        assert!(k.derivative().coeffs.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn table() {
        let t = ChebyshevTable::new(10.0, 1.5, 16, |x| x.cos());
        assert!(t.hi() >= 10.0);
        for &x in &[0.0, 1.5, 4.2, 10.0] {
            assert!((t.eval(x) - x.cos()).abs() < 1e-13);
        }
    }
}
