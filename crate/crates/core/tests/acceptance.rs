//! Runs every shipped config fixture and prints one PASS/FAIL line per
//! acceptance criterion. Independent oracles are checked alongside the
//! pipeline verdicts where one exists.

use kuznecov_weyl::config::ExperimentConfig;
use kuznecov_weyl::kuznecov::{SumTable, TestFunction};
use kuznecov_weyl::pipeline::{run, ComparisonReport};
use kuznecov_weyl::special::gauss_legendre;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_fixture(name: &str, scratch: &Path) -> (ComparisonReport, PathBuf) {
    let mut cfg = ExperimentConfig::load(&fixture(name)).unwrap();
    let out = scratch.join(&cfg.name);
    cfg.output_dir = Some(out.clone());
    cfg.cache_dir = Some(scratch.join("cache"));
    (run(&cfg).unwrap_or_else(|e| panic!("{name}: {e}")), out)
}

/// Σ over m ∈ Z^n with |m| ≤ λ and ||m| − |m_T|| ≤ ε, weighted (2π)^{−(n−d)}.
fn lattice_sharp(n: usize, d: usize, lambda: f64, eps: f64) -> f64 {
    let r = lambda.floor() as i64;
    let mut count = 0u64;
    let mut m = vec![-r; n];
    loop {
        let full: i64 = m.iter().map(|v| v * v).sum();
        let tang: i64 = m[..d].iter().map(|v| v * v).sum();
        let l = (full as f64).sqrt();
        if l <= lambda && (l - (tang as f64).sqrt()).abs() <= eps {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return count as f64 / (2.0 * PI).powi((n - d) as i32);
            }
            m[i] += 1;
            if m[i] <= r {
                break;
            }
            m[i] = -r;
            i += 1;
        }
    }
}

/// ∫_0^a ψ̂(s) s^{−1/2} ds with s = u², the one-sided half of the
/// α = 1/2 pairing; for even ψ̂ both sides carry the same phase.
fn half_power_mass(psi: &TestFunction) -> f64 {
    let rule = gauss_legendre(64);
    let a = psi.radius().sqrt();
    (0..16)
        .map(|k| {
            let lo = a * k as f64 / 16.0;
            let hi = a * (k + 1) as f64 / 16.0;
            rule.integrate(lo, hi, |u| 2.0 * psi.hat_value(u * u))
        })
        .sum()
}

struct Outcome {
    criterion: u32,
    pass: bool,
    detail: String,
}

fn from_report(criterion: u32, report: &ComparisonReport, extra: Vec<(bool, String)>, secs: f64) -> Outcome {
    let mut pass = report.pass();
    let mut lines: Vec<String> = report.verdicts.iter().map(|v| v.line()).collect();
    for (ok, line) in extra {
        pass &= ok;
        lines.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
    }
    Outcome {
        criterion,
        pass,
        detail: format!("[{secs:.1} s]\n      {}", lines.join("\n      ")),
    }
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let dir = scratch.path();
    let mut outcomes = Vec::new();

    let t = Instant::now();
    let (r, out) = run_fixture("c01-edge-exponent.toml", dir);
    let mut extra = Vec::new();
    for (tag, n, d) in [("torus-2-1", 2, 1), ("torus-3-1", 3, 1), ("torus-3-2", 3, 2)] {
        let table = SumTable::read(&out.join(format!("sums-{tag}-c1.csv"))).unwrap();
        let lambda = table.lambda_grid[0];
        let want = lattice_sharp(n, d, lambda, 0.5);
        let got = table.values[0];
        extra.push((
            (got - want).abs() <= 1e-9 * want,
            format!("{tag} lattice count at {lambda}: {got} vs brute force {want}"),
        ));
    }
    let table = SumTable::read(&out.join("sums-torus-2-1-c1.csv")).unwrap();
    let (l, v) = (*table.lambda_grid.last().unwrap(), *table.values.last().unwrap());
    let want = lattice_sharp(2, 1, l, 0.5);
    extra.push(((v - want).abs() <= 1e-9 * want, format!("torus-2-1 lattice count at {l}: {v} vs brute force {want}")));
    outcomes.push(from_report(1, &r, extra, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, _) = run_fixture("c02-bulk-exponent.toml", dir);
    outcomes.push(from_report(2, &r, vec![], t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, _) = run_fixture("c03-sphere-edge.toml", dir);
    outcomes.push(from_report(3, &r, vec![], t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, _) = run_fixture("c04-jump-bound.toml", dir);
    outcomes.push(from_report(4, &r, vec![], t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, _) = run_fixture("c05-coefficient-ratio.toml", dir);
    let fejer = TestFunction::fejer(1.0).unwrap();
    let bump = TestFunction::bump_square(1.0).unwrap();
    let direct = half_power_mass(&fejer) / half_power_mass(&bump);
    let extra = r
        .verdicts
        .iter()
        .map(|v| {
            (
                (v.reference - direct).abs() < 1e-6 * direct,
                format!("{} predicted ratio {} vs direct quadrature {direct}", v.label, v.reference),
            )
        })
        .collect();
    outcomes.push(from_report(5, &r, extra, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, _) = run_fixture("c06-subcritical-ratio.toml", dir);
    // c^{d−1}(1 − c²)^{(n−d−2)/2} is identically 1 for (n, d) = (3, 1)
    let extra = vec![(
        r.verdicts.iter().all(|v| v.reference == 1.0),
        "torus (3,1) predicted ratio is exactly 1".to_string(),
    )];
    outcomes.push(from_report(6, &r, extra, t.elapsed().as_secs_f64()));

    for (k, name) in [
        (7, "c07-double-bessel.toml"),
        (8, "c08-model-integral.toml"),
        (9, "c09-fourier-identity.toml"),
        (10, "c10-hadamard.toml"),
        (11, "c11-positivity.toml"),
    ] {
        let t = Instant::now();
        let (r, _) = run_fixture(name, dir);
        outcomes.push(from_report(k, &r, vec![], t.elapsed().as_secs_f64()));
    }

    println!();
    for o in &outcomes {
        println!("criterion {:>2}: {} {}", o.criterion, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.criterion).collect();
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
