//! Inversion of the measurement operator and the reconstruction regimes.
//!
//! The mirror sweep and the frequency grid form an exact discrete Fourier
//! pair, so [`recover_scattered_spectrum`] inverts the measurement synthesis
//! without interpolation. [`extract_chi_tilde_isotropic`] then strips the
//! far-field prefactor to obtain the combined transform samples
//! `χ̃(ω, (ω/c)(θ+e₃))`, which feed the cone, axial and dispersive paths.

pub mod aniso;
pub mod axial;
pub mod cone;
pub mod dispersive;

pub use aniso::{anisotropic_b, anisotropic_solve, polarization_projection, rotated_direction, rotated_projection, RotatedDirection};
pub use axial::{axial_inversion, AxialProfile, BandWindow};
pub use cone::{cone_coverage, cone_inversion, cone_idft, ConeReconstruction, KGrid};
pub use dispersive::dispersive_recursion;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{pairwise_sum, MeasurementSet, ScatteredSpectrum};
use crate::model::{FrequencyGrid, Geometry, Pulse, Units};

/// Default relative spectral mask threshold `ε_f`.
pub const DEFAULT_EPS_F: f64 = 1e-3;

/// Scattered spectrum recovered from measurements, with the usable-band mask.
#[derive(Debug, Clone)]
pub struct RecoveredSpectrum {
    pub spectrum: ScatteredSpectrum,
    /// Per-frequency usable-band indicator: `|f̂(ω)| ≥ ε_f max|f̂|`.
    pub mask: Vec<bool>,
    /// Which polarization components `j ∈ {1,2}` were recovered.
    pub components: [bool; 2],
}

/// Samples of the combined transform, `values[(ω, θ)]` with the usable-band
/// mask. Masked-out entries are flagged, never silently zero.
#[derive(Debug, Clone)]
pub struct ChiTildeSamples {
    pub grid: FrequencyGrid,
    pub directions: Vec<Vector3<f64>>,
    pub values: Vec<Complex64>,
    pub mask: Vec<bool>,
}

impl ChiTildeSamples {
    pub fn value(&self, omega_idx: usize, det_idx: usize) -> Complex64 {
        self.values[omega_idx * self.directions.len() + det_idx]
    }

    pub fn is_usable(&self, omega_idx: usize, det_idx: usize) -> bool {
        self.mask[omega_idx * self.directions.len() + det_idx]
    }

    /// Largest violation of `value(−ω,θ) = conj(value(ω,θ))` on the mask,
    /// relative to the peak magnitude; zero for data from a real field.
    pub fn hermitian_residual(&self) -> f64 {
        let nd = self.directions.len();
        let peak = self
            .values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.norm())
            .fold(0.0f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 0..self.grid.len() {
            let km = self.grid.mirror_index(k);
            for d in 0..nd {
                if self.is_usable(k, d) && self.is_usable(km, d) {
                    worst = worst.max((self.value(k, d).conj() - self.value(km, d)).norm() / peak);
                }
            }
        }
        worst
    }
}

/// Per-frequency usable-band mask of a pulse: `|f̂(ω_k)| ≥ eps_f · max_k |f̂|`.
pub fn band_mask(pulse: &Pulse, grid: &FrequencyGrid, eps_f: f64) -> Vec<bool> {
    let mags: Vec<f64> = grid.omegas().iter().map(|&w| pulse.spectrum(w).norm()).collect();
    let peak = mags.iter().fold(0.0f64, |m, &v| m.max(v));
    mags.iter().map(|&v| v >= eps_f * peak).collect()
}

/// Invert the measurement operator:
///
/// `(Ê_j − Ê_j⁰)(ω, x) = −(2/c) Σ_r M_{r,j}(x) e^{−i(ω/c)(2r − x₃)} Δr
///     / (conj(f̂(ω)) p_j)`
///
/// for every component `j` with `p_j ≠ 0`. The mirror and frequency grids are
/// exact Fourier partners, so this is the exact inverse of the synthesis on
/// the usable band. Frequencies with `|f̂(ω)| < eps_f · max|f̂|` are masked
/// and their values left at the raw (undivided) scale of zero.
pub fn recover_scattered_spectrum(m: &MeasurementSet, eps_f: f64) -> Result<RecoveredSpectrum> {
    if !(eps_f > 0.0) {
        return Err(Error::InvalidArgument("eps_f must be positive".into()));
    }
    let geometry = &m.geometry;
    let units = m.units;
    let grid = FrequencyGrid::for_geometry(geometry, units)?;
    let dr = geometry.uniform_mirror_spacing()?;
    let p = geometry.polarization;
    let components = [p[0] != 0.0, p[1] != 0.0];
    if !components[0] && !components[1] {
        return Err(Error::InvalidArgument("polarization has no nonzero component".into()));
    }
    let mask = band_mask(&m.pulse, &grid, eps_f);
    if mask.iter().all(|&b| !b) {
        return Err(Error::DegenerateData("the entire frequency band is masked".into()));
    }
    let fhat: Vec<Complex64> = grid.omegas().iter().map(|&w| m.pulse.spectrum(w)).collect();
    let ndet = geometry.detector_directions.len();
    let nmir = geometry.mirror_positions.len();
    let c = units.c;
    let values: Vec<Vector3<Complex64>> = (0..grid.len() * ndet)
        .into_par_iter()
        .map(|idx| {
            let k = idx / ndet;
            let d = idx % ndet;
            let mut out = Vector3::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            if !mask[k] {
                return out;
            }
            let omega = grid.omega(k);
            for j in 0..2 {
                if !components[j] {
                    continue;
                }
                let terms: Vec<Complex64> = (0..nmir)
                    .map(|mi| {
                        let r = geometry.mirror_positions[mi];
                        Complex64::from_polar(
                            m.value(mi, d, j),
                            -omega * (2.0 * r - geometry.d) / c,
                        )
                    })
                    .collect();
                out[j] = pairwise_sum(&terms) * Complex64::new(-2.0 * dr / c, 0.0) / (fhat[k].conj() * p[j]);
            }
            out
        })
        .collect();
    Ok(RecoveredSpectrum {
        spectrum: ScatteredSpectrum { grid, directions: geometry.detector_directions.clone(), values },
        mask,
        components,
    })
}

/// Far-field prefactor of the Born spectrum, `−ω² e^{iωρ/c} f̂(ω) / (4πρc²)`.
fn born_prefactor(pulse: &Pulse, omega: f64, rho: f64, c: f64) -> Complex64 {
    Complex64::from_polar(
        omega * omega / (4.0 * std::f64::consts::PI * rho * c * c),
        omega * rho / c + std::f64::consts::PI,
    ) * pulse.spectrum(omega)
}

/// Extract the combined transform samples under the isotropic assumption:
///
/// `χ̃(ω, (ω/c)(θ+e₃)) = Σ_j p_j (Ê_j − Ê_j⁰)(ω, ρθ)
///     / (prefactor(ω, ρ) · (<θ,p>² − |p|²))`,  `ρ = d/θ₃`.
pub fn extract_chi_tilde_isotropic(
    rec: &RecoveredSpectrum,
    geometry: &Geometry,
    pulse: &Pulse,
    units: Units,
) -> Result<ChiTildeSamples> {
    let grid = rec.spectrum.grid.clone();
    let dirs = &rec.spectrum.directions;
    let p = geometry.polarization;
    let c = units.c;
    // denominators per direction; p3 = 0 and theta3 > 0 keep them negative
    let mut denom = Vec::with_capacity(dirs.len());
    for theta in dirs {
        let d = theta.dot(&p).powi(2) - p.norm_squared();
        if d.abs() < 1e-12 * p.norm_squared().max(1.0) {
            return Err(Error::Numerical(format!(
                "degenerate polarization combination for direction {theta:?}: <theta,p>^2 - |p|^2 = {d}"
            )));
        }
        denom.push(d);
    }
    let nd = dirs.len();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len() * nd];
    let mut mask = vec![false; grid.len() * nd];
    for k in 0..grid.len() {
        if !rec.mask[k] {
            continue;
        }
        let omega = grid.omega(k);
        for d in 0..nd {
            let theta = &dirs[d];
            let rho = geometry.d / theta[2];
            let pref = born_prefactor(pulse, omega, rho, c);
            let mut num = Complex64::new(0.0, 0.0);
            for j in 0..2 {
                if rec.components[j] {
                    num += rec.spectrum.value(k, d)[j] * p[j];
                }
            }
            values[k * nd + d] = num / (pref * denom[d]);
            mask[k * nd + d] = true;
        }
    }
    Ok(ChiTildeSamples { grid, directions: dirs.clone(), values, mask })
}
