//! Full-field optical coherence tomography in the Born regime.
//!
//! The crate synthesizes interferometric cross-correlation measurements from
//! susceptibility phantoms and reconstructs the susceptibility back from the
//! measurements: spectral extraction, cone-limited Fourier inversion, axial
//! profiles, dispersive depth recursion, layered media and anisotropic
//! media under sample rotations.
//!
//! Conventions, fixed crate-wide:
//! * wave speed defaults to `c = 1`, lengths in units of the centre wavelength;
//! * `f̂(ω) = ∫ f(t) e^{+iωt} dt`, inverse carries `1/(2π)`;
//! * the beam propagates along `+e₃` and the sample sits below the detectors.

pub mod config;
pub mod dataset;
pub mod error;
pub mod forward;
pub mod inversion;
pub mod layered;
pub mod model;
pub mod pipeline;
pub mod radon;
pub mod validate;

pub use error::{Error, Result};

/// Least-squares slope of `log(err)` against `log(x)`; used by the far-field
/// convergence checks.
pub fn loglog_slope(xs: &[f64], errs: &[f64]) -> f64 {
    assert_eq!(xs.len(), errs.len());
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
