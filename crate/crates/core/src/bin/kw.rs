use clap::{Parser, Subcommand};
use kuznecov_weyl::asymptotics::{
    fit_growth, fit_leading_coefficient, flat_leading_coefficient, sphere_leading_coefficient, subcritical_coefficient,
};
use kuznecov_weyl::coeffs::{load_or_build, parseval_check, PARSEVAL_CHECK_DEGREE};
use kuznecov_weyl::config::{ExperimentConfig, SourceChoice, CACHE_DIR_ENV};
use kuznecov_weyl::kuznecov::{dual_trace, kuznecov_sum, ShiftedBump, SpectralProfile, SumTable, TestFunction};
use kuznecov_weyl::numeric::{fmt17, parse_grid};
use kuznecov_weyl::oscillatory::{double_bessel, hadamard_transport, model_integral_ladder, Metric, ModelCutoff};
use kuznecov_weyl::pipeline::{cap_for, emit_plot_data, open_source, run, PlotInput, PlotKind};
use kuznecov_weyl::spectra::{enumerate_spectrum, ManifoldPair, PairKind};
use kuznecov_weyl::{Error, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "kw", version, about = "Kuznecov-Weyl sums, restriction coefficients and model integrals")]
struct Cli {
    /// Print info-level progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate M and H modes up to lambda_max as JSON.
    Spectrum {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        lambda_max: f64,
    },
    /// Build or load the cached restriction coefficient table.
    Coeffs {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Ladder sum N^c_psi on a grid, as CSV.
    Sums {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// e.g. sharp:eps=0.5, fejer:a=1, bump:a=1
        #[arg(long)]
        test: String,
        /// lo:hi:count, lin:lo:hi:count or dyadic:lo:hi:per_octave
        #[arg(long)]
        grid: String,
        /// Force the coefficient table even where lattice shells apply.
        #[arg(long)]
        table: bool,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Emit log10 columns instead of raw values.
        #[arg(long)]
        loglog: bool,
    },
    /// Fit a sums CSV: growth exponent, or leading coefficient at a fixed exponent.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        exponent: Option<f64>,
    },
    /// Predicted leading coefficient for a pair and test function.
    Coefficient {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        test: String,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Blow-down model integral on a lambda grid, as CSV.
    ModelIntegral {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, conflicts_with = "bump")]
        test: Option<String>,
        /// Transform support lo,hi of a shifted bump.
        #[arg(long)]
        bump: Option<String>,
        #[arg(long)]
        grid: String,
    },
    /// Double-Bessel integral by quadrature and closed form, as CSV.
    DoubleBessel {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Grid of lambda*r values.
        #[arg(long)]
        grid: String,
    },
    /// Hadamard transport coefficients on a radius grid, as CSV.
    Hadamard {
        /// sphere:N or flat:N
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = 2)]
        j_max: usize,
        #[arg(long)]
        grid: String,
    },
    /// Dual trace S(t, psi) on a t grid, as CSV.
    Trace {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        test: String,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        t_grid: String,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Run an experiment config; exits 2 when a verdict fails.
    Run {
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

struct StderrLog(log::LevelFilter);

impl log::Log for StderrLog {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= self.0
    }
    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("[{}] {}", r.level(), r.args());
        }
    }
    fn flush(&self) {}
}

fn cache_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(".kw-cache"))
}

fn window(spec: Option<String>, t: &SumTable) -> Result<(f64, f64)> {
    match spec {
        None => Ok((t.lambda_grid[0], t.lambda_grid[t.lambda_grid.len() - 1])),
        Some(s) => {
            let bad = || Error::Invalid(format!("window '{s}' is not lo:hi"));
            let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
            Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
        }
    }
}

fn execute(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Spectrum { pair, lambda_max } => {
            let s = enumerate_spectrum(&ManifoldPair::parse(&pair)?, lambda_max)?;
            println!("{}", s.to_json()?);
        }
        Cmd::Coeffs {
            pair,
            lambda_max,
            cache_dir: dir,
        } => {
            let pair = ManifoldPair::parse(&pair)?;
            let (t, outcome) = load_or_build(&pair, lambda_max, &cache_dir(dir))?;
            println!("pair {}", pair.descriptor());
            println!("cache {outcome:?}");
            println!("m_modes {}", t.m_modes.len());
            println!("h_modes {}", t.h_modes.len());
            println!("entries {}", t.entries.len());
            if pair.kind == PairKind::Sphere {
                println!("parseval_defect {:e}", parseval_check(&t, PARSEVAL_CHECK_DEGREE)?);
            }
        }
        Cmd::Sums {
            pair,
            c,
            test,
            grid,
            table,
            cache_dir: dir,
            loglog,
        } => {
            let pair = ManifoldPair::parse(&pair)?;
            let psi = TestFunction::parse(&test)?;
            let grid = parse_grid(&grid)?;
            let choice = if table { SourceChoice::Table } else { SourceChoice::Auto };
            let (src, _) = open_source(&pair, cap_for(&grid, psi.radius()), choice, &cache_dir(dir))?;
            let sums = kuznecov_sum(src.as_dyn(), c, &psi, &grid)?;
            if loglog {
                print!("{}", emit_plot_data(PlotInput::Sums(&sums), PlotKind::LogLog)?);
            } else {
                print!("{}", sums.to_csv());
            }
        }
        Cmd::Fit {
            csv,
            window: w,
            exponent,
        } => {
            let t = SumTable::read(&csv)?;
            let w = window(w, &t)?;
            let json = match exponent {
                Some(p) => serde_json::to_string_pretty(&fit_leading_coefficient(&t, w, p)?)?,
                None => serde_json::to_string_pretty(&fit_growth(&t, w)?)?,
            };
            println!("{json}");
        }
        Cmd::Coefficient { pair, test, c } => {
            let pair = ManifoldPair::parse(&pair)?;
            let psi = TestFunction::parse(&test)?;
            let p = if c < 1.0 {
                subcritical_coefficient(pair.n, pair.d, c, &psi, pair.h_volume())?
            } else {
                match pair.kind {
                    PairKind::Torus => flat_leading_coefficient(pair.n, pair.d, &psi)?,
                    PairKind::Sphere => sphere_leading_coefficient(pair.n, pair.d, &psi)?,
                }
            };
            println!("{}", serde_json::to_string_pretty(&p)?);
            let z = p.phase_normalized();
            println!("phase_normalized {} {}", fmt17(z.re), fmt17(z.im));
        }
        Cmd::ModelIntegral { n, d, test, bump, grid } => {
            let grid = parse_grid(&grid)?;
            let profile: Box<dyn SpectralProfile> = match (test, bump) {
                (_, Some(b)) => {
                    let (lo, hi) = b
                        .split_once(',')
                        .ok_or_else(|| Error::Invalid(format!("bump '{b}' is not lo,hi")))?;
                    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("bad number '{v}'")));
                    Box::new(ShiftedBump::new(num(lo)?, num(hi)?)?)
                }
                (Some(t), None) => Box::new(TestFunction::parse(&t)?),
                (None, None) => return Err(Error::Invalid("give --test or --bump".into())),
            };
            let vals = model_integral_ladder(n, d, &grid, &ModelCutoff::default(), profile.as_ref())?;
            println!("lambda,re,im,abs,quadrature_gap");
            for v in vals {
                println!(
                    "{},{},{},{},{}",
                    fmt17(v.lambda),
                    fmt17(v.value.re),
                    fmt17(v.value.im),
                    fmt17(v.value.norm()),
                    fmt17(v.error)
                );
            }
        }
        Cmd::DoubleBessel { n, d, grid } => {
            let mut y = vec![0.0; d.max(1)];
            y[0] = 1.0;
            println!("lambda_r,closed_form,quadrature_re,quadrature_im,relative_gap");
            for x in parse_grid(&grid)? {
                let b = double_bessel(n, d, x, &y)?;
                println!(
                    "{},{},{},{},{}",
                    fmt17(x),
                    fmt17(b.closed_form),
                    fmt17(b.quadrature.re),
                    fmt17(b.quadrature.im),
                    fmt17(b.relative_gap())
                );
            }
        }
        Cmd::Hadamard { metric, j_max, grid } => {
            let metric: Metric = metric.parse()?;
            let h = hadamard_transport(metric, j_max, &parse_grid(&grid)?)?;
            print!("{}", h.to_csv());
            eprintln!("w0_residual {:e}", h.w0_residual);
            for (j, r) in h.transport_residuals.iter().enumerate() {
                eprintln!("transport_residual_{} {r:e}", j + 1);
            }
        }
        Cmd::Trace {
            pair,
            test,
            lambda_max,
            t_grid,
            cache_dir: dir,
        } => {
            let pair = ManifoldPair::parse(&pair)?;
            let psi = TestFunction::parse(&test)?;
            let times = parse_grid(&t_grid)?;
            let (src, _) = open_source(&pair, lambda_max, SourceChoice::Auto, &cache_dir(dir))?;
            let values = dual_trace(src.as_dyn(), &psi, &times)?;
            print!(
                "{}",
                emit_plot_data(
                    PlotInput::Trace {
                        times: &times,
                        values: &values
                    },
                    PlotKind::Trace
                )?
            );
        }
        Cmd::Run { config, threads } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = threads {
                cfg.threads = t.max(1);
            }
            let report = run(&cfg)?;
            print!("{}", report.summary());
            println!("artifacts in {}", cfg.resolved_output_dir().display());
            if !report.pass() {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = log::set_boxed_logger(Box::new(StderrLog(level)));
    log::set_max_level(level);
    match execute(cli.cmd) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
