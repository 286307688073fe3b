//! Test functions ψ with compactly supported ψ̂, evaluable on both sides of
//! the Fourier transform. Convention: ψ̂(s) = ∫ ψ(x) e^{−ixs} dx.

use crate::error::{Error, Result};
use crate::spectra::ManifoldPair;
use crate::special::quadrature::{gauss_legendre, FilonTransform};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    BumpSquare,
    Fejer,
    SharpIndicator,
}

/// Anything whose Fourier side can be paired against a distribution in s.
pub trait SpectralProfile: Sync {
    fn hat(&self, s: f64) -> f64;
    /// An interval containing supp ψ̂.
    fn hat_support(&self) -> (f64, f64);
    /// Points where ψ̂ fails to be smooth.
    fn hat_kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    fn label(&self) -> String;
}

/// The standard bump exp(−1/(1−t²)) on (−1, 1).
pub fn unit_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// ψ̂ = bump on (lo, hi), no ψ-side evaluation. Used where ψ̂ must avoid s = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedBump {
    pub lo: f64,
    pub hi: f64,
}

impl ShiftedBump {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Invalid(format!("bump needs lo < hi, got ({lo}, {hi})")));
        }
        Ok(ShiftedBump { lo, hi })
    }
}

impl SpectralProfile for ShiftedBump {
    fn hat(&self, s: f64) -> f64 {
        unit_bump((2.0 * s - self.lo - self.hi) / (self.hi - self.lo))
    }
    fn hat_support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn label(&self) -> String {
        format!("shifted-bump:lo={},hi={}", self.lo, self.hi)
    }
}

const BLOCK: usize = 1024;

/// g(x) = (1/π) ∫_0^{a/2} ĝ(s) cos(xs) ds with ĝ(s) = bump(2s/a), memoized on
/// a uniform grid in blocks and interpolated by cubic Hermite.
#[derive(Debug)]
struct BumpData {
    a: f64,
    norm: f64,
    step: f64,
    xmax: f64,
    g: FilonTransform,
    dg: FilonTransform,
    blocks: Vec<OnceLock<Vec<(f64, f64)>>>,
}

impl BumpData {
    fn new(a: f64) -> Self {
        let half = 0.5 * a;
        let fracs = [0.0, 0.25, 0.5, 0.7, 0.8, 0.88, 0.93, 0.965, 0.985, 1.0];
        let breaks: Vec<f64> = fracs.iter().map(|f| f * half).collect();
        let ghat = move |s: f64| unit_bump(s / half);
        let g = FilonTransform::new(&breaks, 36, ghat);
        let dg = FilonTransform::new(&breaks, 36, move |s: f64| s * ghat(s));
        // ∫ ĝ² over (−a/2, a/2)
        let rule = gauss_legendre(40);
        let mut l2 = 0.0;
        for w in breaks.windows(2) {
            l2 += rule.integrate(w[0], w[1], |s| ghat(s).powi(2));
        }
        let norm = 2.0 * PI / (2.0 * l2);
        let step = a.min(1.0 / a) / 512.0;
        let xmax = 400.0 / a;
        let nblocks = (xmax / step) as usize / BLOCK + 2;
        BumpData {
            a,
            norm,
            step,
            xmax,
            g,
            dg,
            blocks: (0..nblocks).map(|_| OnceLock::new()).collect(),
        }
    }

    /// (g, g') by the Filon rule.
    fn direct(&self, x: f64) -> (f64, f64) {
        let g = self.g.transform(x).re / PI;
        let dg = -self.dg.transform(x).im / PI;
        (g, dg)
    }

    fn node(&self, i: usize) -> (f64, f64) {
        let b = i / BLOCK;
        let block = self.blocks[b].get_or_init(|| {
            (0..BLOCK)
                .map(|k| self.direct((b * BLOCK + k) as f64 * self.step))
                .collect()
        });
        block[i % BLOCK]
    }

    fn g(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= self.xmax {
            return 0.0;
        }
        let u = x / self.step;
        let i = u.floor() as usize;
        let t = u - i as f64;
        let (g0, d0) = self.node(i);
        let (g1, d1) = self.node(i + 1);
        let h = self.step;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * g0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * g1 + (t3 - t2) * h * d1
    }

    fn psi(&self, x: f64) -> f64 {
        self.norm * self.g(x).powi(2)
    }

    /// (norm/2π) (ĝ∗ĝ)(s)
    fn hat(&self, s: f64) -> f64 {
        let half = 0.5 * self.a;
        let s = s.abs();
        if s >= self.a {
            return 0.0;
        }
        let lo = s - half;
        let hi = half;
        let rule = gauss_legendre(40);
        let mut acc = 0.0;
        let panels = 4;
        for p in 0..panels {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            acc += rule.integrate(a, b, |t| unit_bump(t / half) * unit_bump((s - t) / half));
        }
        self.norm * acc / (2.0 * PI)
    }
}

/// An even, nonnegative ψ with ψ̂ supported in [−a, a] (or the indicator of
/// [−ε, ε]), times a positive amplitude.
#[derive(Debug, Clone)]
pub struct TestFunction {
    kind: TestKind,
    a: f64,
    scale: f64,
    bump: Option<Arc<BumpData>>,
}

impl TestFunction {
    /// ψ(x) = (a/2π) (sin(ax/2)/(ax/2))², ψ̂ = (1 − |s|/a)_+.
    pub fn fejer(a: f64) -> Result<Self> {
        check_radius(a)?;
        Ok(TestFunction {
            kind: TestKind::Fejer,
            a,
            scale: 1.0,
            bump: None,
        })
    }

    /// ψ = K g² with ĝ a bump on (−a/2, a/2), normalized to ψ̂(0) = 1.
    pub fn bump_square(a: f64) -> Result<Self> {
        check_radius(a)?;
        Ok(TestFunction {
            kind: TestKind::BumpSquare,
            a,
            scale: 1.0,
            bump: Some(Arc::new(BumpData::new(a))),
        })
    }

    /// ψ = 1_{[−ε, ε]}.
    pub fn sharp(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Invalid(format!("window half-width must be >= 0, got {eps}")));
        }
        Ok(TestFunction {
            kind: TestKind::SharpIndicator,
            a: eps,
            scale: 1.0,
            bump: None,
        })
    }

    /// A BumpSquare rescaled so that ψ ≥ 1 on [−ε, ε]; ψ̂ supported in [−2ε, 2ε].
    pub fn dominating(eps: f64) -> Result<Self> {
        check_radius(eps)?;
        let base = TestFunction::bump_square(2.0 * eps)?;
        let m = (0..=200).map(|k| base.eval(eps * k as f64 / 200.0)).fold(f64::INFINITY, f64::min);
        if !(m > 0.0) {
            return Err(Error::Invalid("dominating bump vanishes on the window".into()));
        }
        Ok(base.scaled((1.0 + 1e-12) / m))
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn kind(&self) -> TestKind {
        self.kind
    }

    /// Support radius of ψ̂ for smooth kinds, half-width ε for the indicator.
    pub fn radius(&self) -> f64 {
        self.a
    }

    pub fn amplitude(&self) -> f64 {
        self.scale
    }

    pub fn is_smooth(&self) -> bool {
        self.kind != TestKind::SharpIndicator
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale
            * match self.kind {
                TestKind::Fejer => {
                    let u = 0.5 * self.a * x;
                    let sinc = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
                    self.a / (2.0 * PI) * sinc * sinc
                }
                TestKind::BumpSquare => self.bump.as_ref().expect("bump data").psi(x),
                TestKind::SharpIndicator => {
                    if x.abs() <= self.a {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
    }

    pub fn hat_value(&self, s: f64) -> f64 {
        self.scale
            * match self.kind {
                TestKind::Fejer => (1.0 - s.abs() / self.a).max(0.0),
                TestKind::BumpSquare => self.bump.as_ref().expect("bump data").hat(s),
                TestKind::SharpIndicator => {
                    if s == 0.0 {
                        2.0 * self.a
                    } else {
                        2.0 * (self.a * s).sin() / s
                    }
                }
            }
    }

    /// Reach beyond which ψ is treated as negligible by window pruning:
    /// the indicator's half-width, or +∞ for smooth kinds.
    pub fn reach(&self) -> f64 {
        match self.kind {
            TestKind::SharpIndicator => self.a,
            TestKind::BumpSquare => self.bump.as_ref().map(|b| b.xmax).unwrap_or(f64::INFINITY),
            TestKind::Fejer => f64::INFINITY,
        }
    }

    /// Upper bound on ∫_{|x|>L} ψ.
    pub fn tail_mass(&self, l: f64) -> f64 {
        let l = l.max(0.0);
        self.scale
            * match self.kind {
                TestKind::SharpIndicator => 2.0 * (self.a - l).max(0.0),
                TestKind::Fejer => {
                    if l == 0.0 {
                        1.0
                    } else {
                        (4.0 / (PI * self.a * l)).min(1.0)
                    }
                }
                TestKind::BumpSquare => {
                    let b = self.bump.as_ref().expect("bump data");
                    if l >= b.xmax {
                        return 0.0;
                    }
                    let h = b.step * 8.0;
                    let mut x = l;
                    let mut s = 0.0;
                    while x < b.xmax {
                        s += b.psi(x) * h;
                        x += h;
                    }
                    2.0 * s
                }
            }
    }

    /// Rejects ψ̂ support reaching the injectivity-radius surrogate.
    pub fn check_admissible(&self, pair: &ManifoldPair) -> Result<()> {
        if self.is_smooth() && self.a >= pair.injectivity_radius() {
            return Err(Error::Invalid(format!(
                "supp of the transform radius {} must stay below {} for {}",
                self.a,
                pair.injectivity_radius(),
                pair.descriptor()
            )));
        }
        Ok(())
    }

    /// `fejer:a=1`, `bump:a=1`, `sharp:eps=0.5`, `dominating:eps=0.5`, each
    /// optionally followed by `,scale=K`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut a = None;
        let mut scale = 1.0;
        for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("expected key=value in '{spec}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad number '{v}' in '{spec}'")))?;
            match k.trim() {
                "a" | "eps" => a = Some(v),
                "scale" => scale = v,
                other => return Err(Error::Invalid(format!("unknown parameter '{other}' in '{spec}'"))),
            }
        }
        let a = a.ok_or_else(|| Error::Invalid(format!("missing a= or eps= in '{spec}'")))?;
        if !(scale > 0.0) {
            return Err(Error::Invalid(format!("scale must be positive in '{spec}'")));
        }
        let base = match name.trim() {
            "fejer" => TestFunction::fejer(a)?,
            "bump" => TestFunction::bump_square(a)?,
            "sharp" => TestFunction::sharp(a)?,
            "dominating" => TestFunction::dominating(a)?,
            other => return Err(Error::Invalid(format!("unknown test function '{other}'"))),
        };
        Ok(base.scaled(scale))
    }

    pub fn descriptor(&self) -> String {
        let body = match self.kind {
            TestKind::Fejer => format!("fejer:a={}", self.a),
            TestKind::BumpSquare => format!("bump:a={}", self.a),
            TestKind::SharpIndicator => format!("sharp:eps={}", self.a),
        };
        if self.scale == 1.0 {
            body
        } else {
            format!("{body},scale={}", self.scale)
        }
    }
}

fn check_radius(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Invalid(format!("support radius must be positive, got {a}")));
    }
    Ok(())
}

impl SpectralProfile for TestFunction {
    fn hat(&self, s: f64) -> f64 {
        self.hat_value(s)
    }
    fn hat_support(&self) -> (f64, f64) {
        match self.kind {
            TestKind::SharpIndicator => (f64::NEG_INFINITY, f64::INFINITY),
            _ => (-self.a, self.a),
        }
    }
    fn hat_kinks(&self) -> Vec<f64> {
        match self.kind {
            TestKind::Fejer => vec![0.0],
            _ => Vec::new(),
        }
    }
    fn label(&self) -> String {
        self.descriptor()
    }
}
