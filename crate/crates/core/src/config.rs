//! Experiment configuration files (TOML, one experiment per file).

use crate::error::{Error, Result};
use crate::kuznecov::TestFunction;
use crate::numeric::parse_grid;
use crate::oscillatory::Metric;
use crate::spectra::ManifoldPair;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CACHE_DIR_ENV: &str = "KW_CACHE_DIR";
pub const OUTPUT_DIR_ENV: &str = "KW_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Acceptance criterion the verdicts are filed under.
    #[serde(default)]
    pub criterion: Option<u32>,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

fn one() -> usize {
    1
}

/// A manifold pair with its λ grid and fit window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumCase {
    pub pair: String,
    pub grid: String,
    /// Defaults to the whole grid.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// `auto` streams lattice shells for equal-period tori and uses the
    /// cached coefficient table otherwise; `table` always uses the table.
    #[serde(default)]
    pub source: SourceChoice,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceChoice {
    #[default]
    Auto,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryCase {
    pub dims: Vec<[usize; 2]>,
    /// Support of the bump transform, away from 0.
    pub bump: [f64; 2],
    pub grid: String,
    #[serde(default = "minus_one")]
    pub slope: f64,
    pub tolerance: f64,
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCheck {
    pub dims: Vec<usize>,
    /// Complex times as [re, im].
    pub times: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    /// Fitted growth exponent of N^c against (n+d)/2 or n − 1.
    Growth {
        cases: Vec<SumCase>,
        c: Vec<f64>,
        test: String,
        tolerance: f64,
        /// Also bound the Parseval defect of sphere tables.
        #[serde(default)]
        parseval_tolerance: Option<f64>,
    },
    /// Ratio of fitted c = 1 leading coefficients for two test functions.
    CoefficientRatio {
        cases: Vec<SumCase>,
        tests: [String; 2],
        tolerance: f64,
    },
    /// Ratio of fitted bulk coefficients for two values of c.
    SubcriticalRatio {
        cases: Vec<SumCase>,
        c: [f64; 2],
        test: String,
        tolerance: f64,
    },
    /// Trend of normalized jumps plus the smooth-over-sharp sandwich.
    JumpBound {
        cases: Vec<SumCase>,
        eps: f64,
    },
    DoubleBessel {
        dims: Vec<[usize; 2]>,
        grid: String,
        tolerance: f64,
    },
    ModelIntegral {
        dims: Vec<[usize; 2]>,
        test: String,
        grid: String,
        tolerance: f64,
        #[serde(default)]
        stationary: Option<StationaryCase>,
    },
    FourierIdentity {
        betas: Vec<f64>,
        sigmas: Vec<f64>,
        tolerance: f64,
    },
    Hadamard {
        metrics: Vec<String>,
        j_max: usize,
        grid: String,
        tolerance: f64,
        #[serde(default)]
        kernel: Option<KernelCheck>,
    },
    /// Sign of fitted and predicted c = 1 coefficients, and the far tail share.
    Positivity {
        cases: Vec<SumCase>,
        tests: Vec<String>,
        tail_tolerance: f64,
    },
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, file: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            file: file.to_string(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        cfg.validate().map_err(|(field, msg)| Error::Config {
            file: file.to_string(),
            line: field_line(text, field),
            msg: format!("{field}: {msg}"),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Cache directory: environment override, then the file, then `.kw-cache`.
    pub fn resolved_cache_dir(&self) -> PathBuf {
        std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.cache_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".kw-cache"))
    }

    /// Output directory: environment override, then the file, then `kw-out/<name>`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(|p| PathBuf::from(p).join(&self.name))
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("kw-out").join(&self.name))
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(("name", "must be a nonempty plain file name".into()));
        }
        if self.threads == 0 {
            return Err(("threads", "must be at least 1".into()));
        }
        let tol = |t: f64| {
            if t > 0.0 && t.is_finite() {
                Ok(())
            } else {
                Err(("tolerance", format!("must be positive, got {t}")))
            }
        };
        match &self.experiment {
            Experiment::Growth {
                cases,
                c,
                test,
                tolerance,
                parseval_tolerance,
            } => {
                check_cases(cases)?;
                if c.is_empty() {
                    return Err(("c", "needs at least one value".into()));
                }
                for v in c {
                    check_c(*v)?;
                }
                check_test(test, "test")?;
                tol(*tolerance)?;
                if let Some(p) = parseval_tolerance {
                    tol(*p).map_err(|(_, m)| ("parseval_tolerance", m))?;
                }
            }
            Experiment::CoefficientRatio { cases, tests, tolerance } => {
                check_cases(cases)?;
                for t in tests {
                    check_test(t, "tests")?;
                }
                tol(*tolerance)?;
            }
            Experiment::SubcriticalRatio { cases, c, test, tolerance } => {
                check_cases(cases)?;
                for v in c {
                    check_c(*v)?;
                    if *v <= 0.0 || *v >= 1.0 {
                        return Err(("c", format!("subcritical values must lie in (0, 1), got {v}")));
                    }
                }
                check_test(test, "test")?;
                tol(*tolerance)?;
            }
            Experiment::JumpBound { cases, eps } => {
                check_cases(cases)?;
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(("eps", format!("must be positive, got {eps}")));
                }
            }
            Experiment::DoubleBessel { dims, grid, tolerance } => {
                check_dims(dims)?;
                check_grid(grid, "grid")?;
                tol(*tolerance)?;
            }
            Experiment::ModelIntegral {
                dims,
                test,
                grid,
                tolerance,
                stationary,
            } => {
                check_dims(dims)?;
                check_test(test, "test")?;
                check_grid(grid, "grid")?;
                tol(*tolerance)?;
                if let Some(s) = stationary {
                    check_dims(&s.dims)?;
                    check_grid(&s.grid, "grid")?;
                    if !(s.bump[0] > 0.0 && s.bump[1] > s.bump[0]) {
                        return Err(("bump", format!("needs 0 < lo < hi, got {:?}", s.bump)));
                    }
                    tol(s.tolerance)?;
                }
            }
            Experiment::FourierIdentity { betas, sigmas, tolerance } => {
                if let Some(b) = betas.iter().find(|b| !(**b > -1.0)) {
                    return Err(("betas", format!("must exceed -1, got {b}")));
                }
                if let Some(s) = sigmas.iter().find(|s| **s == 0.0 || !s.is_finite()) {
                    return Err(("sigmas", format!("must be finite and nonzero, got {s}")));
                }
                tol(*tolerance)?;
            }
            Experiment::Hadamard {
                metrics,
                grid,
                tolerance,
                kernel,
                ..
            } => {
                for m in metrics {
                    m.parse::<Metric>().map_err(|e| ("metrics", e.to_string()))?;
                }
                check_grid(grid, "grid")?;
                tol(*tolerance)?;
                if let Some(k) = kernel {
                    if let Some(t) = k.times.iter().find(|t| !(t[1] > 0.0)) {
                        return Err(("times", format!("kernel check needs Im t > 0, got {t:?}")));
                    }
                    if k.dims.iter().any(|n| *n < 1) {
                        return Err(("dims", "sphere dimension must be >= 1".into()));
                    }
                    tol(k.tolerance)?;
                }
            }
            Experiment::Positivity {
                cases,
                tests,
                tail_tolerance,
            } => {
                check_cases(cases)?;
                for t in tests {
                    check_test(t, "tests")?;
                }
                tol(*tail_tolerance).map_err(|(_, m)| ("tail_tolerance", m))?;
            }
        }
        Ok(())
    }
}

fn check_c(c: f64) -> std::result::Result<(), (&'static str, String)> {
    if !(0.0..=1.0).contains(&c) {
        return Err(("c", format!("must lie in [0, 1] (sums decay rapidly beyond 1), got {c}")));
    }
    Ok(())
}

fn check_test(spec: &str, field: &'static str) -> std::result::Result<(), (&'static str, String)> {
    TestFunction::parse(spec).map(|_| ()).map_err(|e| (field, e.to_string()))
}

fn check_grid(spec: &str, field: &'static str) -> std::result::Result<(), (&'static str, String)> {
    parse_grid(spec).map(|_| ()).map_err(|e| (field, e.to_string()))
}

fn check_dims(dims: &[[usize; 2]]) -> std::result::Result<(), (&'static str, String)> {
    if dims.is_empty() {
        return Err(("dims", "needs at least one (n, d)".into()));
    }
    for [n, d] in dims {
        if *d < 1 || d >= n {
            return Err(("dims", format!("need 1 <= d < n, got ({n}, {d})")));
        }
    }
    Ok(())
}

fn check_cases(cases: &[SumCase]) -> std::result::Result<(), (&'static str, String)> {
    if cases.is_empty() {
        return Err(("cases", "needs at least one case".into()));
    }
    for c in cases {
        ManifoldPair::parse(&c.pair).map_err(|e| ("pair", e.to_string()))?;
        check_grid(&c.grid, "grid")?;
        if let Some([lo, hi]) = c.window {
            if !(lo < hi) {
                return Err(("window", format!("needs lo < hi, got [{lo}, {hi}]")));
            }
        }
    }
    Ok(())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line assigning `field`, or 0 when the key is implicit.
fn field_line(text: &str, field: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(field).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
        .unwrap_or(0)
}

impl SumCase {
    pub fn pair(&self) -> Result<ManifoldPair> {
        ManifoldPair::parse(&self.pair)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        parse_grid(&self.grid)
    }

    pub fn window(&self) -> Result<(f64, f64)> {
        match self.window {
            Some([lo, hi]) => Ok((lo, hi)),
            None => {
                let g = self.grid()?;
                Ok((g[0], g[g.len() - 1]))
            }
        }
    }
}
