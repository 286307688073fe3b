//! Hadamard transport coefficients on round spheres, and the closed-form
//! complex-time wave kernel against its mode sum.

use kuznecov_weyl::numeric::parse_grid;
use kuznecov_weyl::oscillatory::{hadamard_transport, mode_sum_terms, sphere_wave_kernel, sphere_wave_mode_sum, Metric};
use num_complex::Complex64;

fn main() -> kuznecov_weyl::Result<()> {
    let grid = parse_grid("lin:0.1:2.5:25")?;
    for spec in ["sphere:2", "sphere:3", "flat:3"] {
        let metric: Metric = spec.parse()?;
        let h = hadamard_transport(metric, 2, &grid)?;
        println!("{spec}: W0 residual {:.1e}, transport residuals {:?}", h.w0_residual, h.transport_residuals);
    }
    let t = Complex64::new(0.7, 0.3);
    for n in 1..=4 {
        let k = sphere_wave_kernel(n, t, 1.2)?;
        let m = sphere_wave_mode_sum(n, t, 1.2, mode_sum_terms(n, t))?;
        println!("S^{n}: kernel {k:.10} mode sum {m:.10}");
    }
    Ok(())
}
