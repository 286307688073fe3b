//! Experiment orchestration: sources, sums, fits, predictions, verdicts,
//! and the CSV/JSON artifacts written along the way.

use crate::asymptotics::{
    fit_growth, fit_leading_coefficient, flat_leading_coefficient, jump_bound_check, predicted_exponent,
    sphere_leading_coefficient, subcritical_coefficient, CoefficientPrediction, JumpBoundReport,
};
use crate::coeffs::{load_or_build, parseval_check, CacheOutcome, CoefficientTable, PARSEVAL_CHECK_DEGREE};
use crate::config::{Experiment, ExperimentConfig, SourceChoice, SumCase};
use crate::error::{Error, Result};
use crate::kuznecov::{
    jumps, kuznecov_sum, support_tail_fraction, JumpEntry, ShiftedBump, SpectralSource, SumTable, TestFunction,
    TorusShells,
};
use crate::numeric::{fmt17, parse_grid};
use crate::oscillatory::{
    decay_slope, double_bessel, hadamard_transport, mode_sum_terms, model_integral_ladder, model_prediction,
    sphere_wave_kernel, sphere_wave_mode_sum, Metric, ModelCutoff,
};
use crate::special::regularized::{fourier_power_closed_form, fourier_power_limit, fourier_schedule};
use crate::spectra::{ManifoldPair, PairKind};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// |measured − reference| ≤ tolerance
    Within,
    /// |measured / reference − 1| ≤ tolerance
    Relative,
    /// measured < tolerance
    Below,
    /// measured ≤ reference
    AtMost,
    /// measured ≥ reference
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: Option<u32>,
    pub label: String,
    pub rule: Rule,
    pub measured: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn new(criterion: Option<u32>, label: impl Into<String>, rule: Rule, measured: f64, reference: f64, tolerance: f64) -> Self {
        let pass = match rule {
            Rule::Within => (measured - reference).abs() <= tolerance,
            Rule::Relative => (measured / reference - 1.0).abs() <= tolerance,
            Rule::Below => measured < tolerance,
            Rule::AtMost => measured <= reference,
            Rule::AtLeast => measured >= reference,
        };
        Verdict {
            criterion,
            label: label.into(),
            rule,
            measured,
            reference,
            tolerance,
            pass,
        }
    }

    pub fn line(&self) -> String {
        let cmp = match self.rule {
            Rule::Within => format!("{} vs {} (±{})", short(self.measured), short(self.reference), short(self.tolerance)),
            Rule::Relative => format!(
                "{} vs {} (rel {}, tol {})",
                short(self.measured),
                short(self.reference),
                short((self.measured / self.reference - 1.0).abs()),
                short(self.tolerance)
            ),
            Rule::Below => format!("{} < {}", short(self.measured), short(self.tolerance)),
            Rule::AtMost => format!("{} <= {}", short(self.measured), short(self.reference)),
            Rule::AtLeast => format!("{} >= {}", short(self.measured), short(self.reference)),
        };
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.label, cmp)
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub name: String,
    pub criterion: Option<u32>,
    pub verdicts: Vec<Verdict>,
    pub jump_bounds: Vec<(String, JumpBoundReport)>,
    /// (pair, outcome) for every coefficient table the run touched.
    pub cache: Vec<(String, String)>,
    /// Artifact file names relative to the output directory.
    pub artifacts: Vec<String>,
    /// Seconds per stage; kept out of report.json so reruns compare equal.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl ComparisonReport {
    fn new(cfg: &ExperimentConfig) -> Self {
        ComparisonReport {
            name: cfg.name.clone(),
            criterion: cfg.criterion,
            verdicts: Vec::new(),
            jump_bounds: Vec::new(),
            cache: Vec::new(),
            artifacts: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn summary(&self) -> String {
        let mut s = match self.criterion {
            Some(c) => format!("{} (criterion {c}): {}\n", self.name, if self.pass() { "PASS" } else { "FAIL" }),
            None => format!("{}: {}\n", self.name, if self.pass() { "PASS" } else { "FAIL" }),
        };
        for v in &self.verdicts {
            s.push_str(&format!("  {}\n", v.line()));
        }
        for (pair, outcome) in &self.cache {
            s.push_str(&format!("  cache {pair}: {outcome}\n"));
        }
        for (stage, secs) in &self.timings {
            s.push_str(&format!("  time {stage}: {secs:.2} s\n"));
        }
        s
    }

    fn verdict(&mut self, label: impl Into<String>, rule: Rule, measured: f64, reference: f64, tolerance: f64) {
        self.verdicts
            .push(Verdict::new(self.criterion, label, rule, measured, reference, tolerance));
    }
}

/// A spectral source chosen for a pair.
pub enum Source {
    Shells(TorusShells),
    Table(Box<CoefficientTable>),
}

impl Source {
    pub fn as_dyn(&self) -> &dyn SpectralSource {
        match self {
            Source::Shells(s) => s,
            Source::Table(t) => t.as_ref(),
        }
    }

    pub fn table(&self) -> Option<&CoefficientTable> {
        match self {
            Source::Table(t) => Some(t),
            Source::Shells(_) => None,
        }
    }
}

/// Lattice shells for equal-period tori under `Auto`, else the cached table.
pub fn open_source(pair: &ManifoldPair, lambda_max: f64, choice: SourceChoice, cache_dir: &Path) -> Result<(Source, Option<CacheOutcome>)> {
    if choice == SourceChoice::Auto && pair.kind == PairKind::Torus && pair.equal_periods() {
        return Ok((Source::Shells(TorusShells::new(pair, lambda_max)?), None));
    }
    let (t, outcome) = load_or_build(pair, lambda_max, cache_dir)?;
    Ok((Source::Table(Box::new(t)), Some(outcome)))
}

/// Source cap covering a grid plus the window margin the sums insist on.
pub fn cap_for(grid: &[f64], margin: f64) -> f64 {
    grid[grid.len() - 1] + margin + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LogLog,
    Jumps,
    Trace,
    CoefficientRatio,
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(PlotKind::LogLog),
            "jumps" => Ok(PlotKind::Jumps),
            "trace" => Ok(PlotKind::Trace),
            "coefficient-ratio" => Ok(PlotKind::CoefficientRatio),
            other => Err(Error::Invalid(format!(
                "unknown plot kind '{other}' (loglog, jumps, trace, coefficient-ratio)"
            ))),
        }
    }
}

pub enum PlotInput<'a> {
    Sums(&'a SumTable),
    Jumps { entries: &'a [JumpEntry], n: usize, d: usize },
    Trace { times: &'a [f64], values: &'a [Complex64] },
    Report(&'a ComparisonReport),
}

/// Plain CSV with a header row naming columns and units.
pub fn emit_plot_data(input: PlotInput, kind: PlotKind) -> Result<String> {
    let mut s = String::new();
    match (input, kind) {
        (PlotInput::Sums(t), PlotKind::LogLog) => {
            s.push_str("log10_lambda[log10 frequency],log10_N[log10 count]\n");
            for (l, v) in t.lambda_grid.iter().zip(&t.values) {
                if !(*v > 0.0) {
                    return Err(Error::Invalid(format!("loglog needs positive sums, got {v} at {l}")));
                }
                s.push_str(&format!("{},{}\n", fmt17(l.log10()), fmt17(v.log10())));
            }
        }
        (PlotInput::Jumps { entries, n, d }, PlotKind::Jumps) => {
            let p = (n + d) as f64 / 2.0 - 1.0;
            s.push_str(&format!("lambda_j[frequency],J[count],J_over_lambda_pow_{p}[count/frequency^{p}]\n"));
            for e in entries {
                s.push_str(&format!(
                    "{},{},{}\n",
                    fmt17(e.lambda),
                    fmt17(e.value),
                    fmt17(e.value / e.lambda.powf(p))
                ));
            }
        }
        (PlotInput::Trace { times, values }, PlotKind::Trace) => {
            if times.len() != values.len() {
                return Err(Error::Invalid("trace times and values differ in length".into()));
            }
            s.push_str("t[time],re_S[count],im_S[count],abs_S[count]\n");
            for (t, v) in times.iter().zip(values) {
                s.push_str(&format!("{},{},{},{}\n", fmt17(*t), fmt17(v.re), fmt17(v.im), fmt17(v.norm())));
            }
        }
        (PlotInput::Report(r), PlotKind::CoefficientRatio) => {
            s.push_str("label,fitted_ratio[1],predicted_ratio[1],relative_gap[1]\n");
            for v in r.verdicts.iter().filter(|v| v.rule == Rule::Relative) {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    v.label.replace(',', ";"),
                    fmt17(v.measured),
                    fmt17(v.reference),
                    fmt17((v.measured / v.reference - 1.0).abs())
                ));
            }
        }
        (_, kind) => return Err(Error::Invalid(format!("plot kind {kind:?} does not fit this input"))),
    }
    Ok(s)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    cache: PathBuf,
    report: ComparisonReport,
}

impl Ctx<'_> {
    fn write(&mut self, file: &str, body: &str) -> Result<()> {
        std::fs::write(self.out.join(file), body)?;
        self.report.artifacts.push(file.to_string());
        Ok(())
    }

    fn write_sums(&mut self, t: &SumTable, stem: &str) -> Result<()> {
        t.write(&self.out, stem)?;
        self.report.artifacts.push(format!("{stem}.csv"));
        self.report.artifacts.push(format!("{stem}.json"));
        self.write(&format!("{stem}-loglog.csv"), &emit_plot_data(PlotInput::Sums(t), PlotKind::LogLog)?)
    }

    fn source(&mut self, pair: &ManifoldPair, cap: f64, choice: SourceChoice) -> Result<Source> {
        let (src, outcome) = open_source(pair, cap, choice, &self.cache).map_err(|e| e.at("coefficients"))?;
        if let Some(o) = outcome {
            let o = match o {
                CacheOutcome::Hit => "hit".to_string(),
                CacheOutcome::Built => "built".to_string(),
                CacheOutcome::Rebuilt(why) => format!("rebuilt ({why})"),
            };
            self.report.cache.push((pair.descriptor(), o));
        }
        Ok(src)
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let r = f(self);
        self.report.timings.push((stage.to_string(), t0.elapsed().as_secs_f64()));
        r
    }
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        if ch.is_ascii_alphanumeric() || ch == '.' {
            out.push(ch);
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

struct Prepared {
    pair: ManifoldPair,
    grid: Vec<f64>,
    window: (f64, f64),
    tag: String,
}

fn prepare(case: &SumCase) -> Result<Prepared> {
    let pair = case.pair().map_err(|e| e.at("config"))?;
    let grid = case.grid().map_err(|e| e.at("config"))?;
    let window = case.window()?;
    let tag = slug(&pair.descriptor());
    Ok(Prepared { pair, grid, window, tag })
}

fn edge_prediction(pair: &ManifoldPair, psi: &TestFunction) -> Result<CoefficientPrediction> {
    match pair.kind {
        PairKind::Torus => flat_leading_coefficient(pair.n, pair.d, psi),
        PairKind::Sphere => sphere_leading_coefficient(pair.n, pair.d, psi),
    }
}

/// Runs the experiment on a pool of `cfg.threads` workers and writes
/// `report.json`, `summary.txt` and the per-stage artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_here(cfg))
}

fn run_here(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let out = cfg.resolved_output_dir();
    std::fs::create_dir_all(&out)?;
    let mut ctx = Ctx {
        cfg,
        out,
        cache: cfg.resolved_cache_dir(),
        report: ComparisonReport::new(cfg),
    };
    let t0 = Instant::now();
    match &cfg.experiment {
        Experiment::Growth {
            cases,
            c,
            test,
            tolerance,
            parseval_tolerance,
        } => growth(&mut ctx, cases, c, test, *tolerance, *parseval_tolerance)?,
        Experiment::CoefficientRatio { cases, tests, tolerance } => coefficient_ratio(&mut ctx, cases, tests, *tolerance)?,
        Experiment::SubcriticalRatio { cases, c, test, tolerance } => subcritical_ratio(&mut ctx, cases, *c, test, *tolerance)?,
        Experiment::JumpBound { cases, eps } => jump_bound(&mut ctx, cases, *eps)?,
        Experiment::DoubleBessel { dims, grid, tolerance } => double_bessel_check(&mut ctx, dims, grid, *tolerance)?,
        Experiment::ModelIntegral {
            dims,
            test,
            grid,
            tolerance,
            stationary,
        } => model_check(&mut ctx, dims, test, grid, *tolerance, stationary.as_ref())?,
        Experiment::FourierIdentity { betas, sigmas, tolerance } => fourier_check(&mut ctx, betas, sigmas, *tolerance)?,
        Experiment::Hadamard {
            metrics,
            j_max,
            grid,
            tolerance,
            kernel,
        } => hadamard_check(&mut ctx, metrics, *j_max, grid, *tolerance, kernel.as_ref())?,
        Experiment::Positivity {
            cases,
            tests,
            tail_tolerance,
        } => positivity(&mut ctx, cases, tests, *tail_tolerance)?,
    }
    ctx.report.timings.push(("total".into(), t0.elapsed().as_secs_f64()));
    ctx.report.artifacts.push("report.json".into());
    ctx.report.artifacts.push("summary.txt".into());
    std::fs::write(ctx.out.join("report.json"), serde_json::to_string_pretty(&ctx.report)?)?;
    std::fs::write(ctx.out.join("summary.txt"), ctx.report.summary())?;
    log::info!("{} finished in {:.2} s", ctx.cfg.name, t0.elapsed().as_secs_f64());
    Ok(ctx.report)
}

fn growth(ctx: &mut Ctx, cases: &[SumCase], cs: &[f64], test: &str, tol: f64, parseval: Option<f64>) -> Result<()> {
    let psi = TestFunction::parse(test)?;
    for case in cases {
        let p = prepare(case)?;
        let src = ctx.source(&p.pair, cap_for(&p.grid, psi.radius()), case.source)?;
        if let (Some(limit), PairKind::Sphere) = (parseval, p.pair.kind) {
            let table = src.table().expect("sphere pairs use tables");
            let defect = match table.parseval_defect {
                Some(d) => d,
                None => parseval_check(table, PARSEVAL_CHECK_DEGREE).map_err(|e| e.at("parseval"))?,
            };
            ctx.report
                .verdict(format!("{} Parseval defect N <= {PARSEVAL_CHECK_DEGREE}", p.tag), Rule::Below, defect, 0.0, limit);
        }
        for &c in cs {
            let sums = ctx
                .timed(&format!("sums {} c={c}", p.tag), |_| kuznecov_sum(src.as_dyn(), c, &psi, &p.grid))
                .map_err(|e| e.at("sums"))?;
            ctx.write_sums(&sums, &format!("sums-{}-c{c}", p.tag))?;
            let fit = fit_growth(&sums, p.window).map_err(|e| e.at("fit"))?;
            let want = predicted_exponent(c, p.pair.n, p.pair.d)?;
            ctx.report
                .verdict(format!("{} c={c} exponent", p.tag), Rule::Within, fit.exponent, want, tol);
        }
    }
    Ok(())
}

fn coefficient_ratio(ctx: &mut Ctx, cases: &[SumCase], tests: &[String; 2], tol: f64) -> Result<()> {
    let psis = [TestFunction::parse(&tests[0])?, TestFunction::parse(&tests[1])?];
    let margin = psis[0].radius().max(psis[1].radius());
    for case in cases {
        let p = prepare(case)?;
        let src = ctx.source(&p.pair, cap_for(&p.grid, margin), case.source)?;
        let exponent = (p.pair.n + p.pair.d) as f64 / 2.0;
        let mut fitted = [0.0; 2];
        let mut predicted = [Complex64::new(0.0, 0.0); 2];
        for (i, psi) in psis.iter().enumerate() {
            let sums = kuznecov_sum(src.as_dyn(), 1.0, psi, &p.grid).map_err(|e| e.at("sums"))?;
            ctx.write_sums(&sums, &format!("sums-{}-{}", p.tag, slug(&psi.descriptor())))?;
            fitted[i] = fit_leading_coefficient(&sums, p.window, exponent)
                .map_err(|e| e.at("fit"))?
                .coefficient;
            predicted[i] = edge_prediction(&p.pair, psi).map_err(|e| e.at("prediction"))?.value;
        }
        let want = (predicted[0] / predicted[1]).re;
        ctx.report.verdict(
            format!("{} coefficient ratio {} / {}", p.tag, tests[0], tests[1]),
            Rule::Relative,
            fitted[0] / fitted[1],
            want,
            tol,
        );
    }
    let csv = emit_plot_data(PlotInput::Report(&ctx.report), PlotKind::CoefficientRatio)?;
    ctx.write("coefficient-ratio.csv", &csv)
}

fn subcritical_ratio(ctx: &mut Ctx, cases: &[SumCase], cs: [f64; 2], test: &str, tol: f64) -> Result<()> {
    let psi = TestFunction::parse(test)?;
    for case in cases {
        let p = prepare(case)?;
        let src = ctx.source(&p.pair, cap_for(&p.grid, psi.radius()), case.source)?;
        let exponent = p.pair.n as f64 - 1.0;
        let mut fitted = [0.0; 2];
        let mut predicted = [0.0; 2];
        for (i, &c) in cs.iter().enumerate() {
            let sums = kuznecov_sum(src.as_dyn(), c, &psi, &p.grid).map_err(|e| e.at("sums"))?;
            ctx.write_sums(&sums, &format!("sums-{}-c{c}", p.tag))?;
            fitted[i] = fit_leading_coefficient(&sums, p.window, exponent)
                .map_err(|e| e.at("fit"))?
                .coefficient;
            predicted[i] = subcritical_coefficient(p.pair.n, p.pair.d, c, &psi, p.pair.h_volume())?.value.re;
        }
        ctx.report.verdict(
            format!("{} coefficient ratio c={} / c={}", p.tag, cs[0], cs[1]),
            Rule::Relative,
            fitted[0] / fitted[1],
            predicted[0] / predicted[1],
            tol,
        );
    }
    let csv = emit_plot_data(PlotInput::Report(&ctx.report), PlotKind::CoefficientRatio)?;
    ctx.write("coefficient-ratio.csv", &csv)
}

fn jump_bound(ctx: &mut Ctx, cases: &[SumCase], eps: f64) -> Result<()> {
    let sharp = TestFunction::sharp(eps)?;
    let dominating = TestFunction::dominating(eps)?;
    for case in cases {
        let p = prepare(case)?;
        let src = ctx.source(&p.pair, cap_for(&p.grid, dominating.radius()), case.source)?;
        let found = jumps(src.as_dyn(), &sharp, p.window.0, p.window.1).map_err(|e| e.at("jumps"))?;
        let csv = emit_plot_data(
            PlotInput::Jumps {
                entries: &found,
                n: p.pair.n,
                d: p.pair.d,
            },
            PlotKind::Jumps,
        )?;
        ctx.write(&format!("jumps-{}.csv", p.tag), &csv)?;
        let trend = jump_bound_check(&found, p.pair.n, p.pair.d).map_err(|e| e.at("jump bound"))?;
        ctx.report.verdict(
            format!("{} normalized jump trend, lower CI end of slope", p.tag),
            Rule::AtMost,
            trend.slope_ci.0,
            0.0,
            0.0,
        );
        ctx.report.jump_bounds.push((p.tag.clone(), trend));
        let upper = kuznecov_sum(src.as_dyn(), 1.0, &dominating, &p.grid).map_err(|e| e.at("sums"))?;
        let lower = kuznecov_sum(src.as_dyn(), 1.0, &sharp, &p.grid).map_err(|e| e.at("sums"))?;
        ctx.write_sums(&upper, &format!("sums-{}-dominating", p.tag))?;
        ctx.write_sums(&lower, &format!("sums-{}-sharp", p.tag))?;
        let gap = upper
            .values
            .iter()
            .zip(&lower.values)
            .map(|(u, l)| u - l)
            .fold(f64::INFINITY, f64::min);
        ctx.report
            .verdict(format!("{} sandwich min(smooth - sharp)", p.tag), Rule::AtLeast, gap, 0.0, 0.0);
    }
    Ok(())
}

fn double_bessel_check(ctx: &mut Ctx, dims: &[[usize; 2]], grid: &str, tol: f64) -> Result<()> {
    let grid = parse_grid(grid)?;
    for &[n, d] in dims {
        let mut csv = String::from("lambda_r[1],closed_form[1],quadrature_re[1],quadrature_im[1],relative_gap[1]\n");
        let mut worst = 0.0f64;
        let mut y = vec![0.0; d];
        y[0] = 1.0;
        for &x in &grid {
            let b = double_bessel(n, d, x, &y).map_err(|e| e.at("double bessel"))?;
            let gap = b.relative_gap();
            worst = worst.max(gap);
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(x),
                fmt17(b.closed_form),
                fmt17(b.quadrature.re),
                fmt17(b.quadrature.im),
                fmt17(gap)
            ));
        }
        ctx.write(&format!("double-bessel-{n}-{d}.csv"), &csv)?;
        ctx.report
            .verdict(format!("({n},{d}) max two-path relative gap"), Rule::Below, worst, 0.0, tol);
    }
    Ok(())
}

fn model_check(
    ctx: &mut Ctx,
    dims: &[[usize; 2]],
    test: &str,
    grid: &str,
    tol: f64,
    stationary: Option<&crate::config::StationaryCase>,
) -> Result<()> {
    let psi = TestFunction::parse(test)?;
    let grid = parse_grid(grid)?;
    let cutoff = ModelCutoff::default();
    for &[n, d] in dims {
        let vals = ctx
            .timed(&format!("model ({n},{d})"), |_| model_integral_ladder(n, d, &grid, &cutoff, &psi))
            .map_err(|e| e.at("model integral"))?;
        let mut csv = String::from("lambda[frequency],re_I[1],im_I[1],abs_I[1],quadrature_gap[1]\n");
        for v in &vals {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(v.lambda),
                fmt17(v.value.re),
                fmt17(v.value.im),
                fmt17(v.value.norm()),
                fmt17(v.error)
            ));
        }
        ctx.write(&format!("model-{n}-{d}.csv"), &csv)?;
        let abs: Vec<f64> = vals.iter().map(|v| v.value.norm()).collect();
        let (slope, _) = decay_slope(&grid, &abs)?;
        let want = -(d as f64 - 1.0) - (n - d) as f64 / 2.0;
        ctx.report
            .verdict(format!("({n},{d}) raw model slope"), Rule::Within, slope, want, tol);
    }
    if let Some(s) = stationary {
        let bump = ShiftedBump::new(s.bump[0], s.bump[1])?;
        let grid = parse_grid(&s.grid)?;
        for &[n, d] in &s.dims {
            let vals = ctx
                .timed(&format!("stationary ({n},{d})"), |_| model_integral_ladder(n, d, &grid, &cutoff, &bump))
                .map_err(|e| e.at("model integral"))?;
            let mut csv = String::from("lambda[frequency],re_I[1],im_I[1],re_pred[1],im_pred[1],relative_error[1]\n");
            let mut errs = Vec::with_capacity(vals.len());
            for v in &vals {
                let pred = model_prediction(n, d, v.lambda, &cutoff, &bump).map_err(|e| e.at("prediction"))?;
                let e = (v.value - pred).norm() / pred.norm();
                errs.push(e);
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt17(v.lambda),
                    fmt17(v.value.re),
                    fmt17(v.value.im),
                    fmt17(pred.re),
                    fmt17(pred.im),
                    fmt17(e)
                ));
            }
            ctx.write(&format!("stationary-{n}-{d}.csv"), &csv)?;
            let (slope, _) = decay_slope(&grid, &errs)?;
            ctx.report.verdict(
                format!("({n},{d}) stationary-phase error slope"),
                Rule::Within,
                slope,
                s.slope,
                s.tolerance,
            );
        }
    }
    Ok(())
}

fn fourier_check(ctx: &mut Ctx, betas: &[f64], sigmas: &[f64], tol: f64) -> Result<()> {
    let schedule = fourier_schedule();
    let mut csv = String::from("beta[1],sigma[1],limit_re[1],limit_im[1],closed_re[1],closed_im[1],relative_gap[1]\n");
    for &beta in betas {
        for &sigma in sigmas {
            let lim = fourier_power_limit(beta, sigma, &schedule).map_err(|e| e.at("fourier limit"))?;
            let closed = fourier_power_closed_form(beta, sigma);
            let gap = (lim.value - closed).norm() / closed.norm();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt17(beta),
                fmt17(sigma),
                fmt17(lim.value.re),
                fmt17(lim.value.im),
                fmt17(closed.re),
                fmt17(closed.im),
                fmt17(gap)
            ));
            ctx.report
                .verdict(format!("beta={beta} sigma={sigma} relative gap"), Rule::Below, gap, 0.0, tol);
        }
    }
    ctx.write("fourier-identity.csv", &csv)
}

fn hadamard_check(
    ctx: &mut Ctx,
    metrics: &[String],
    j_max: usize,
    grid: &str,
    tol: f64,
    kernel: Option<&crate::config::KernelCheck>,
) -> Result<()> {
    let grid = parse_grid(grid)?;
    for m in metrics {
        let metric: Metric = m.parse()?;
        let h = hadamard_transport(metric, j_max, &grid).map_err(|e| e.at("hadamard"))?;
        ctx.write(&format!("hadamard-{}.csv", slug(m)), &h.to_csv())?;
        match metric {
            Metric::RoundSphere(_) => {
                ctx.report
                    .verdict(format!("{m} W0 residual"), Rule::Below, h.w0_residual, 0.0, tol);
            }
            Metric::Flat(_) => {
                let worst = h.w[1..]
                    .iter()
                    .flat_map(|row| row.iter())
                    .fold(0.0f64, |a, v| a.max(v.norm()));
                ctx.report.verdict(format!("{m} max |W_j|, j >= 1"), Rule::AtMost, worst, 0.0, 0.0);
            }
        }
    }
    if let Some(k) = kernel {
        let mut csv = String::from("n[1],re_t[time],im_t[time],r[length],kernel_re[1],kernel_im[1],mode_sum_re[1],mode_sum_im[1],relative_gap[1]\n");
        for &n in &k.dims {
            let mut worst = 0.0f64;
            for &[re, im] in &k.times {
                let t = Complex64::new(re, im);
                for &r in &k.radii {
                    let closed = sphere_wave_kernel(n, t, r).map_err(|e| e.at("wave kernel"))?;
                    let sum = sphere_wave_mode_sum(n, t, r, mode_sum_terms(n, t)).map_err(|e| e.at("mode sum"))?;
                    let gap = (closed - sum).norm() / sum.norm();
                    worst = worst.max(gap);
                    csv.push_str(&format!(
                        "{n},{},{},{},{},{},{},{},{}\n",
                        fmt17(re),
                        fmt17(im),
                        fmt17(r),
                        fmt17(closed.re),
                        fmt17(closed.im),
                        fmt17(sum.re),
                        fmt17(sum.im),
                        fmt17(gap)
                    ));
                }
            }
            ctx.report
                .verdict(format!("S^{n} wave kernel vs mode sum"), Rule::Below, worst, 0.0, k.tolerance);
        }
        ctx.write("wave-kernel.csv", &csv)?;
    }
    Ok(())
}

fn positivity(ctx: &mut Ctx, cases: &[SumCase], tests: &[String], tail_tol: f64) -> Result<()> {
    let psis = tests.iter().map(|t| TestFunction::parse(t)).collect::<Result<Vec<_>>>()?;
    let margin = psis.iter().fold(0.0f64, |m, p| m.max(p.radius()));
    for case in cases {
        let p = prepare(case)?;
        let src = ctx.source(&p.pair, cap_for(&p.grid, margin), case.source)?;
        let exponent = (p.pair.n + p.pair.d) as f64 / 2.0;
        for psi in &psis {
            let label = format!("{} {}", p.tag, psi.descriptor());
            let sums = kuznecov_sum(src.as_dyn(), 1.0, psi, &p.grid).map_err(|e| e.at("sums"))?;
            ctx.write_sums(&sums, &format!("sums-{}-{}", p.tag, slug(&psi.descriptor())))?;
            let fit = fit_leading_coefficient(&sums, p.window, exponent).map_err(|e| e.at("fit"))?;
            ctx.report
                .verdict(format!("{label} fitted coefficient"), Rule::AtLeast, fit.coefficient, 0.0, 0.0);
            if psi.is_smooth() {
                let pred = edge_prediction(&p.pair, psi).map_err(|e| e.at("prediction"))?;
                ctx.report.verdict(
                    format!("{label} phase-normalized predicted coefficient"),
                    Rule::AtLeast,
                    pred.phase_normalized().re,
                    0.0,
                    0.0,
                );
            }
            let top = p.grid[p.grid.len() - 1];
            let tail = support_tail_fraction(src.as_dyn(), psi, top).map_err(|e| e.at("support tail"))?;
            ctx.report
                .verdict(format!("{label} share of mu > lambda + 10a"), Rule::Below, tail, 0.0, tail_tol);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(body: &str, dir: &Path) -> ExperimentConfig {
        let text = format!(
            "name = \"t\"\ncriterion = 1\noutput_dir = \"{}\"\ncache_dir = \"{}\"\n{body}",
            dir.join("out").display(),
            dir.join("cache").display()
        );
        ExperimentConfig::from_toml(&text, "mem").unwrap()
    }

    #[test]
    fn minimal_torus_edge() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            r#"
[experiment]
kind = "growth"
c = [1.0]
test = "sharp:eps=0.5"
tolerance = 0.15

[[experiment.cases]]
pair = "torus:2:1"
grid = "dyadic:100:400:8"
"#,
            dir.path(),
        );
        let report = run(&cfg).unwrap();
        assert!(report.pass(), "{}", report.summary());
        assert!((report.verdicts[0].measured - 1.5).abs() < 0.15);
        assert!(dir.path().join("out/report.json").exists());
        let csv = std::fs::read_to_string(dir.path().join("out/sums-torus-2-1-c1-loglog.csv")).unwrap();
        assert!(csv.starts_with("log10_lambda"));
    }

    #[test]
    fn warm_cache_reproduces() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            r#"
[experiment]
kind = "growth"
c = [1.0]
test = "sharp:eps=0.5"
tolerance = 0.3
parseval_tolerance = 1e-8

[[experiment.cases]]
pair = "sphere:2:1"
grid = "dyadic:10:40:8"
"#,
            dir.path(),
        );
        let first = run(&cfg).unwrap();
        let csv = std::fs::read(dir.path().join("out/sums-sphere-2-1-laplace-c1.csv")).unwrap();
        let json = std::fs::read(dir.path().join("out/report.json")).unwrap();
        let second = run(&cfg).unwrap();
        assert_eq!(first.cache[0].1, "built");
        assert_eq!(second.cache[0].1, "hit");
        assert_eq!(first.verdicts, second.verdicts);
        assert_eq!(std::fs::read(dir.path().join("out/sums-sphere-2-1-laplace-c1.csv")).unwrap(), csv);
        let json2 = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
        assert_eq!(json2.replace("\"hit\"", "\"built\"").into_bytes(), json);
    }

    #[test]
    fn thread_count_does_not_change_values() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"
[experiment]
kind = "growth"
c = [1.0, 0.5]
test = "fejer:a=1"
tolerance = 1.0

[[experiment.cases]]
pair = "torus:3:1"
grid = "dyadic:10:40:8"
"#;
        let mut cfg = config(body, dir.path());
        let a = run(&cfg).unwrap();
        let csv1 = std::fs::read(dir.path().join("out/sums-torus-3-1-c0.5.csv")).unwrap();
        cfg.threads = 3;
        let b = run(&cfg).unwrap();
        let csv3 = std::fs::read(dir.path().join("out/sums-torus-3-1-c0.5.csv")).unwrap();
        assert_eq!(a.verdicts, b.verdicts);
        assert_eq!(csv1, csv3);
    }

    #[test]
    fn plot_kinds() {
        assert!("heatmap".parse::<PlotKind>().is_err());
        let t = SumTable::synthetic(vec![10.0, 100.0], vec![1.0, 1000.0]).unwrap();
        let csv = emit_plot_data(PlotInput::Sums(&t), PlotKind::LogLog).unwrap();
        assert_eq!(csv.lines().nth(2).unwrap(), format!("{},{}", fmt17(2.0), fmt17(3.0)));
        assert!(emit_plot_data(PlotInput::Sums(&t), PlotKind::Trace).is_err());
        let entries = [JumpEntry {
            key: crate::spectra::EigenKey(4),
            lambda: 4.0,
            value: 6.0,
        }];
        let csv = emit_plot_data(PlotInput::Jumps { entries: &entries, n: 2, d: 1 }, PlotKind::Jumps).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(&fmt17(3.0)));
        let csv = emit_plot_data(
            PlotInput::Trace {
                times: &[0.0],
                values: &[Complex64::new(3.0, 4.0)],
            },
            PlotKind::Trace,
        )
        .unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(&fmt17(5.0)));
    }

    #[test]
    fn verdict_rules() {
        assert!(Verdict::new(None, "a", Rule::Within, 1.4, 1.5, 0.15).pass);
        assert!(!Verdict::new(None, "a", Rule::Relative, 1.2, 1.0, 0.1).pass);
        assert!(Verdict::new(None, "a", Rule::Below, 1e-9, 0.0, 1e-8).pass);
        assert!(!Verdict::new(None, "a", Rule::AtLeast, -1e-300, 0.0, 0.0).pass);
        assert!(Verdict::new(None, "a", Rule::AtMost, 0.0, 0.0, 0.0).pass);
    }
}
