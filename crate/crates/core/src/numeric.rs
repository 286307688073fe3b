//! Small numeric helpers shared across modules.

use crate::error::{Error, Result};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Parses `lo:hi:count`, geometric spacing; a `lin:` prefix gives linear
/// spacing, a `dyadic:` prefix reads the count as points per octave.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let (mode, body) = if let Some(rest) = spec.strip_prefix("lin:") {
        ("lin", rest)
    } else if let Some(rest) = spec.strip_prefix("dyadic:") {
        ("dyadic", rest)
    } else {
        ("geo", spec.strip_prefix("geo:").unwrap_or(spec))
    };
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Invalid(format!("grid spec '{spec}' is not lo:hi:count")));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| Error::Invalid(format!("bad grid start in '{spec}'")))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| Error::Invalid(format!("bad grid end in '{spec}'")))?;
    let count: usize = parts[2].trim().parse().map_err(|_| Error::Invalid(format!("bad grid count in '{spec}'")))?;
    match mode {
        "lin" => linear_grid(lo, hi, count),
        "dyadic" => {
            if !(hi > lo && lo > 0.0 && count > 0) {
                return Err(Error::Invalid(format!("dyadic grid needs 0 < lo < hi and count >= 1, got '{spec}'")));
            }
            dyadic_grid(lo, hi, count)
        }
        _ => geometric_grid(lo, hi, count),
    }
}

pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(hi > lo) {
        return Err(Error::Invalid(format!("grid needs lo < hi and count >= 2, got {lo}:{hi}:{count}")));
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

/// Points equally spaced in log λ; endpoints exact.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(hi > lo) || !(lo > 0.0) {
        return Err(Error::Invalid(format!("geometric grid needs 0 < lo < hi and count >= 2, got {lo}:{hi}:{count}")));
    }
    let r = (hi / lo).ln();
    let mut g: Vec<f64> = (0..count).map(|i| lo * (r * i as f64 / (count - 1) as f64).exp()).collect();
    g[count - 1] = hi;
    Ok(g)
}

/// Dyadic grid: `per_octave` geometric points per doubling from lo to hi.
pub fn dyadic_grid(lo: f64, hi: f64, per_octave: usize) -> Result<Vec<f64>> {
    let octaves = (hi / lo).log2();
    let count = (octaves * per_octave as f64).round() as usize + 1;
    geometric_grid(lo, hi, count.max(2))
}

/// Ordinary least squares y = α + β x. Returns (α, β, se(β), r²).
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("zero variance in the regressor".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - alpha - beta * a).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let se = (sse / (nf - 2.0) / sxx).sqrt();
    Ok((alpha, beta, se, r2))
}

/// Two-sided 97.5% Student-t quantile, tabulated for small dof.
pub fn t_quantile_975(dof: usize) -> f64 {
    const T: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110,
        2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    match dof {
        0 => f64::INFINITY,
        1..=30 => T[dof - 1],
        31..=60 => 2.000,
        61..=120 => 1.980,
        _ => 1.960,
    }
}

/// 17 significant digits, round-trip exact.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum() {
        let mut s = Neumaier::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn grids() {
        let g = parse_grid("10:400:40").unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[39], 400.0);
        let l = parse_grid("lin:0:8:5").unwrap();
        assert_eq!(l, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert!(parse_grid("1:2").is_err());
        let d = parse_grid("dyadic:100:800:4").unwrap();
        assert_eq!(d.len(), 13);
        assert!((d[4] - 200.0).abs() < 1e-9);
        assert!(parse_grid("5:1:4").is_err());
        assert_eq!(dyadic_grid(100.0, 800.0, 8).unwrap().len(), 25);
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (a, b, se, r2) = ols(&x, &y).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && se < 1e-14 && r2 == 1.0);
        assert!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
