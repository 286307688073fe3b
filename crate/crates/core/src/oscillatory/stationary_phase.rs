//! Leading-order stationary phase for nondegenerate critical points, a
//! brute-force tensor quadrature to check it against, and the model Hessian.

use crate::error::{Error, Result};
use crate::numeric::ols;
use crate::special::gauss_legendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

pub type RealField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ComplexField = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Largest number of nodes the brute-force rule may use.
pub const BRUTE_NODE_BUDGET: u64 = 40_000_000;
pub const MAX_BRUTE_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub det: f64,
    pub signature: i32,
}

/// det and signature of a symmetric matrix; errors if it is singular.
pub fn hessian_data(h: &DMatrix<f64>) -> Result<(f64, i32)> {
    if !h.is_square() {
        return Err(Error::Invalid("Hessian must be square".into()));
    }
    if h.nrows() == 0 {
        return Ok((1.0, 0));
    }
    let eig = h.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if eig.eigenvalues.iter().any(|v| v.abs() <= 1e-12 * scale.max(1.0)) {
        return Err(Error::Invalid(format!("degenerate Hessian, eigenvalues {:?}", eig.eigenvalues.as_slice())));
    }
    let signature = eig.eigenvalues.iter().map(|v| if *v > 0.0 { 1 } else { -1 }).sum();
    Ok((h.determinant(), signature))
}

/// ∫ a(x) e^{iλS(x)} dx over a box containing supp a.
#[derive(Clone)]
pub struct PhaseProblem {
    pub dim: usize,
    pub phase: RealField,
    pub gradient: VectorField,
    pub hessian: MatrixField,
    pub amplitude: ComplexField,
    pub support: Vec<(f64, f64)>,
    pub critical_points: Vec<CriticalPoint>,
}

impl std::fmt::Debug for PhaseProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseProblem")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("critical_points", &self.critical_points)
            .finish()
    }
}

impl PhaseProblem {
    pub fn new(
        dim: usize,
        phase: RealField,
        gradient: VectorField,
        hessian: MatrixField,
        amplitude: ComplexField,
        support: Vec<(f64, f64)>,
        points: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if dim == 0 || support.len() != dim || support.iter().any(|(a, b)| !(b > a)) {
            return Err(Error::Invalid(format!("support must be {dim} nonempty intervals")));
        }
        let mut critical_points = Vec::with_capacity(points.len());
        for x in points {
            if x.len() != dim {
                return Err(Error::Invalid(format!("critical point {x:?} is not in R^{dim}")));
            }
            let g = gradient(&x);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(gn < 1e-10) {
                return Err(Error::Invalid(format!("|grad S| = {gn:e} at {x:?}, not critical")));
            }
            let h = hessian(&x);
            if h.nrows() != dim || h.ncols() != dim {
                return Err(Error::Invalid(format!("Hessian at {x:?} is not {dim}x{dim}")));
            }
            let (det, signature) = hessian_data(&h)?;
            critical_points.push(CriticalPoint { x, hessian: h, det, signature });
        }
        Ok(PhaseProblem {
            dim,
            phase,
            gradient,
            hessian,
            amplitude,
            support,
            critical_points,
        })
    }

    /// S(x) = ½ xᵀ H x with its single critical point at 0.
    pub fn quadratic(h: DMatrix<f64>, amplitude: ComplexField, support: Vec<(f64, f64)>) -> Result<Self> {
        let dim = h.nrows();
        let (h1, h2, h3) = (h.clone(), h.clone(), h.clone());
        PhaseProblem::new(
            dim,
            Arc::new(move |x| {
                let v = nalgebra::DVector::from_column_slice(x);
                0.5 * v.dot(&(&h1 * &v))
            }),
            Arc::new(move |x| {
                let v = nalgebra::DVector::from_column_slice(x);
                (&h2 * v).iter().copied().collect()
            }),
            Arc::new(move |_| h3.clone()),
            amplitude,
            support,
            vec![vec![0.0; dim]],
        )
    }
}

/// Σ over critical points of (2π/λ)^{n/2} |det S''|^{−1/2} e^{iπ sgn/4} e^{iλS} a.
pub fn stationary_phase_leading(problem: &PhaseProblem, lambda: f64) -> Complex64 {
    let scale = (2.0 * PI / lambda).powf(problem.dim as f64 / 2.0);
    problem
        .critical_points
        .iter()
        .map(|cp| {
            let s = (problem.phase)(&cp.x);
            let a = (problem.amplitude)(&cp.x);
            a * Complex64::from_polar(scale / cp.det.abs().sqrt(), PI * cp.signature as f64 / 4.0 + lambda * s)
        })
        .sum()
}

/// Largest |∇S| over a coarse lattice of the support box.
fn gradient_bound(problem: &PhaseProblem) -> f64 {
    let per = 9usize;
    let total = per.pow(problem.dim as u32);
    let mut x = vec![0.0; problem.dim];
    let mut g = 0.0f64;
    for idx in 0..total {
        let mut r = idx;
        for (i, (a, b)) in problem.support.iter().enumerate() {
            x[i] = a + (b - a) * (r % per) as f64 / (per - 1) as f64;
            r /= per;
        }
        g = g.max((problem.gradient)(&x).iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    g
}

/// Tensor Gauss-Legendre with panels sized so the phase turns by at most
/// about 2 radians per panel.
pub fn brute_force(problem: &PhaseProblem, lambda: f64) -> Result<Complex64> {
    if problem.dim > MAX_BRUTE_DIM {
        return Err(Error::Range(format!("brute-force rule supports dimension <= {MAX_BRUTE_DIM}")));
    }
    let order = 12;
    let g = gradient_bound(problem).max(1.0);
    let rule = gauss_legendre(order);
    let axes: Vec<Vec<(f64, f64)>> = problem
        .support
        .iter()
        .map(|&(a, b)| {
            let panels = (lambda * g * (b - a) / 2.0).ceil() as usize + 2;
            (0..panels)
                .flat_map(|p| {
                    let lo = a + (b - a) * p as f64 / panels as f64;
                    let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
                    rule.mapped(lo, hi).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let needed: u64 = axes.iter().map(|a| a.len() as u64).product();
    if needed > BRUTE_NODE_BUDGET {
        return Err(Error::Budget {
            what: "brute-force nodes".into(),
            needed,
            budget: BRUTE_NODE_BUDGET,
        });
    }
    let mut x = vec![0.0; problem.dim];
    let mut total = Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; problem.dim];
    loop {
        let mut w = 1.0;
        for (i, axis) in axes.iter().enumerate() {
            let (xi, wi) = axis[idx[i]];
            x[i] = xi;
            w *= wi;
        }
        let a = (problem.amplitude)(&x);
        if a != Complex64::new(0.0, 0.0) {
            total += a * Complex64::from_polar(w, lambda * (problem.phase)(&x));
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == problem.dim {
                return Ok(total);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProbe {
    pub lambdas: Vec<f64>,
    pub brute: Vec<Complex64>,
    pub leading: Vec<Complex64>,
    pub relative_errors: Vec<f64>,
    /// Slope of log(relative error) against log λ.
    pub slope: f64,
    pub slope_stderr: f64,
}

pub fn error_probe(problem: &PhaseProblem, lambdas: &[f64]) -> Result<ErrorProbe> {
    let mut brute = Vec::with_capacity(lambdas.len());
    let mut leading = Vec::with_capacity(lambdas.len());
    let mut relative_errors = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let b = brute_force(problem, l)?;
        let s = stationary_phase_leading(problem, l);
        relative_errors.push((b - s).norm() / b.norm());
        brute.push(b);
        leading.push(s);
    }
    let (slope, slope_stderr) = decay_slope(lambdas, &relative_errors)?;
    Ok(ErrorProbe {
        lambdas: lambdas.to_vec(),
        brute,
        leading,
        relative_errors,
        slope,
        slope_stderr,
    })
}

/// Least-squares slope of log e against log λ with its standard error.
pub fn decay_slope(lambdas: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (_, slope, se, _) = ols(&x, &y)?;
    Ok((slope, se))
}

/// The (y', x') block of the model Hessian at y' = x' = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHessian {
    pub y_d: f64,
    /// [[0, I], [I, −y_d I]] of size 2(d−1).
    pub matrix: DMatrix<f64>,
    pub det: f64,
    pub signature: i32,
    /// [[y_d I, I], [I, 0]].
    pub inverse: DMatrix<f64>,
    /// max |inverse · matrix − I|.
    pub inverse_residual: f64,
    /// Largest entry of the inverse; stays bounded as y_d → 0.
    pub inverse_bound: f64,
}

pub fn hessian_model(n: usize, d: usize, y_d: f64) -> Result<ModelHessian> {
    if d == 0 || d >= n {
        return Err(Error::Invalid(format!("need 1 <= d < n, got n={n}, d={d}")));
    }
    let k = d - 1;
    let mut matrix = DMatrix::zeros(2 * k, 2 * k);
    let mut inverse = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        matrix[(i, k + i)] = 1.0;
        matrix[(k + i, i)] = 1.0;
        matrix[(k + i, k + i)] = -y_d;
        inverse[(i, i)] = y_d;
        inverse[(i, k + i)] = 1.0;
        inverse[(k + i, i)] = 1.0;
    }
    let (det, signature) = hessian_data(&matrix)?;
    let inverse_residual = (&inverse * &matrix - DMatrix::identity(2 * k, 2 * k)).amax();
    let inverse_bound = if k == 0 { 0.0 } else { inverse.amax() };
    Ok(ModelHessian {
        y_d,
        matrix,
        det,
        signature,
        inverse,
        inverse_residual,
        inverse_bound,
    })
}

/// Hessian of Σ_{j<d} y_j x_j − ½ y_d |x|² in (y, x) ∈ R^d × R^{n−1} at
/// y' = 0, x' = 0, with the given y_d and x''.
pub fn model_full_hessian(n: usize, d: usize, y_d: f64, x_normal: &[f64]) -> Result<DMatrix<f64>> {
    if d == 0 || d >= n {
        return Err(Error::Invalid(format!("need 1 <= d < n, got n={n}, d={d}")));
    }
    if x_normal.len() != n - d {
        return Err(Error::Invalid(format!("x'' must have {} components", n - d)));
    }
    let m = d + n - 1;
    // variables: y_1..y_d, then x_1..x_{n−1}; x'' = x_d..x_{n−1}
    let xi = |j: usize| d + j;
    let mut h = DMatrix::zeros(m, m);
    for j in 0..d - 1 {
        h[(j, xi(j))] = 1.0;
        h[(xi(j), j)] = 1.0;
    }
    for j in 0..n - 1 {
        h[(xi(j), xi(j))] = -y_d;
    }
    for (k, v) in x_normal.iter().enumerate() {
        let j = xi(d - 1 + k);
        h[(d - 1, j)] = -v;
        h[(j, d - 1)] = -v;
    }
    Ok(h)
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |a, v| a.max(*v));
    sv.iter().filter(|v| **v > 1e-12 * top.max(1.0)).count()
}
