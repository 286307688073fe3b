//! Double-Bessel integral by quadrature against its closed form.

use kuznecov_weyl::oscillatory::double_bessel;

fn main() -> kuznecov_weyl::Result<()> {
    for (n, d) in [(3, 1), (4, 2), (5, 3)] {
        let mut y = vec![0.0; d];
        y[0] = 1.0;
        for x in [0.5, 5.0, 25.0] {
            let b = double_bessel(n, d, x, &y)?;
            println!("({n},{d}) λr = {x:>4}: closed {:+.12e} gap {:.1e}", b.closed_form, b.relative_gap());
        }
    }
    Ok(())
}
