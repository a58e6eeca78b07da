//! Far-field validity of the dyadic Green's function: the relative deviation
//! between the exact volume potential and its far-field form decays like
//! `1/rho`. Prints the error at each distance and the fitted log-log slope.
//!
//! Run with `cargo run --release --example far_field_convergence`.

use ffoct::forward::{dyadic_green_farfield, dyadic_green_field, VectorField};
use nalgebra::Vector3;

fn main() -> ffoct::Result<()> {
    let a = 2.0 * std::f64::consts::PI; // wavenumber for a unit wavelength
    let spacing = 0.05;
    let n = 3;
    let mut values = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                values.push(Vector3::new(
                    1.0 + 0.1 * i as f64,
                    0.3 * j as f64,
                    0.2 - 0.05 * k as f64,
                ));
            }
        }
    }
    let phi =
        VectorField { origin: Vector3::repeat(-1.5 * spacing), spacing, shape: [n, n, n], values };
    let theta = Vector3::new(0.2, -0.1, 1.0).normalize();

    let rhos = [50.0, 100.0, 200.0, 400.0];
    let errs: Vec<f64> = rhos
        .iter()
        .map(|&rho| {
            let exact = dyadic_green_field(&phi, a, &(theta * rho))?;
            let far = dyadic_green_farfield(&phi, a, rho, &theta);
            Ok((exact - far).norm() / far.norm())
        })
        .collect::<ffoct::Result<_>>()?;
    for (rho, err) in rhos.iter().zip(&errs) {
        println!("rho = {rho:5.0} wavelengths: relative deviation {err:.3e}");
    }
    println!("log-log slope: {:.4} (expected -1)", ffoct::loglog_slope(&rhos, &errs));
    Ok(())
}
