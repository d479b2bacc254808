//! Derivatives on the space-time torus: spectral vs fourth-order central.

use std::f64::consts::PI;

use evans_kam::{DiffMethod, ScalarField, TorusGrid};

fn main() -> evans_kam::Result<()> {
    for n in [8, 16, 32, 64] {
        let grid = TorusGrid::new(1, n, n)?;
        let f = ScalarField::from_fn(&grid, |z| (2.0 * PI * (z[0] + 2.0 * z[1])).sin() + (2.0 * PI * z[0]).cos().exp());
        let exact_x = ScalarField::from_fn(&grid, |z| {
            2.0 * PI * (2.0 * PI * (z[0] + 2.0 * z[1])).cos() - 2.0 * PI * (2.0 * PI * z[0]).sin() * (2.0 * PI * z[0]).cos().exp()
        });
        let spectral = f.partial(0, DiffMethod::Spectral)?.max_abs_diff(&exact_x)?;
        let central = f.partial(0, DiffMethod::Central4)?.max_abs_diff(&exact_x)?;
        println!("n = {n:3}  spectral {spectral:.3e}  central4 {central:.3e}");
    }
    Ok(())
}
