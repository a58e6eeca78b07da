//! Reconstruction from partial Fourier data on the cone.
//!
//! The accessible wave vectors `k = (ω/c)(θ+e₃)` fill the right circular
//! cone with axis `e₃` and aperture `π/2`. Samples are regridded onto a
//! Cartesian k-grid by cloud-in-cell binning, zero-filled outside, and
//! inverted by a 3D inverse DFT.

use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{ScalarGrid, Units};

use super::ChiTildeSamples;

/// Wave vector of a sample and whether it lies inside the cone
/// (half-opening angle `π/4` about `e₃`, boundary excluded; `ω = 0` maps to
/// `k = 0` and is flagged out-of-cone).
pub fn cone_coverage(theta: &Vector3<f64>, omega: f64, units: Units) -> (Vector3<f64>, bool) {
    let k = (theta + Vector3::new(0.0, 0.0, 1.0)) * (omega / units.c);
    let n = k.norm();
    if n == 0.0 {
        return (k, false);
    }
    let angle = (k[2] / n).clamp(-1.0, 1.0).acos();
    (k, angle < std::f64::consts::FRAC_PI_4)
}

/// Cubic Cartesian k-grid paired with an output voxel grid: `n` nodes per
/// axis at `k_m = (m − n/2) Δk` with `Δk = 2π/(n · spacing)`, so the inverse
/// DFT lands exactly on voxel centers `x_origin + (j + ½) spacing`.
#[derive(Debug, Clone)]
pub struct KGrid {
    pub n: usize,
    pub spacing: f64,
    pub x_origin: Vector3<f64>,
}

impl KGrid {
    pub fn new(n: usize, spacing: f64, x_origin: Vector3<f64>) -> Result<Self> {
        if n < 2 || n % 2 != 0 || !(spacing > 0.0) {
            return Err(Error::InvalidArgument(
                "k-grid needs an even node count >= 2 and positive spacing".into(),
            ));
        }
        Ok(KGrid { n, spacing, x_origin })
    }

    pub fn delta_k(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n as f64 * self.spacing)
    }

    /// Fractional grid coordinates of a wave vector, `(k/Δk) + n/2`.
    pub fn coords(&self, k: &Vector3<f64>) -> Vector3<f64> {
        k / self.delta_k() + Vector3::repeat(self.n as f64 / 2.0)
    }
}

/// Result of a cone reconstruction.
#[derive(Debug, Clone)]
pub struct ConeReconstruction {
    pub field: ScalarGrid,
    /// Largest imaginary part discarded, relative to the peak magnitude.
    pub imag_residual: f64,
    /// k-bins that received nonzero regridding weight.
    pub filled_bins: Vec<bool>,
    /// Fraction of k-bins inside the cone that received samples.
    pub coverage: f64,
    pub kgrid: KGrid,
}

/// Inverse 3D DFT of a spectrum given on the k-grid:
///
/// `χ(x_j) = (Δk/2π)³ Σ_m χ̃(k_m) e^{i<k_m, x_j>}`
///
/// evaluated by FFT with explicit half-grid shifts. Returns the real part
/// and the relative imaginary residual.
pub fn cone_idft(spectrum: &[Complex64], kgrid: &KGrid) -> Result<(ScalarGrid, f64)> {
    let n = kgrid.n;
    if spectrum.len() != n * n * n {
        return Err(Error::DataMismatch(format!(
            "spectrum has {} entries, k-grid needs {}",
            spectrum.len(),
            n * n * n
        )));
    }
    let dk = kgrid.delta_k();
    let x0 = kgrid.x_origin + Vector3::repeat(kgrid.spacing / 2.0);
    // twiddle: e^{i (m - n/2) dk x0_a} per axis
    let twiddle: Vec<Vec<Complex64>> = (0..3)
        .map(|a| {
            (0..n)
                .map(|m| Complex64::from_polar(1.0, (m as f64 - n as f64 / 2.0) * dk * x0[a]))
                .collect()
        })
        .collect();
    let mut data: Vec<Complex64> = (0..n * n * n)
        .map(|idx| {
            let (i, rem) = (idx / (n * n), idx % (n * n));
            let (j, k) = (rem / n, rem % n);
            spectrum[idx] * twiddle[0][i] * twiddle[1][j] * twiddle[2][k]
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // axis 2 (contiguous rows)
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    // axes 1 and 0 via gather/scatter
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                buf[j] = data[(i * n + j) * n + k];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                data[(i * n + j) * n + k] = buf[j];
            }
        }
    }
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                buf[i] = data[(i * n + j) * n + k];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                data[(i * n + j) * n + k] = buf[i];
            }
        }
    }

    let scale = (dk / (2.0 * std::f64::consts::PI)).powi(3);
    let mut values = Vec::with_capacity(n * n * n);
    let mut peak = 0.0f64;
    let mut imag = 0.0f64;
    for idx in 0..n * n * n {
        let (i, rem) = (idx / (n * n), idx % (n * n));
        let (j, k) = (rem / n, rem % n);
        let parity = if (i + j + k) % 2 == 0 { 1.0 } else { -1.0 };
        let v = data[idx] * parity * scale;
        peak = peak.max(v.norm());
        imag = imag.max(v.im.abs());
        values.push(v.re);
    }
    let grid = ScalarGrid { origin: kgrid.x_origin, spacing: kgrid.spacing, shape: [n, n, n], values };
    Ok((grid, if peak > 0.0 { imag / peak } else { 0.0 }))
}

/// Regrid the usable cone samples onto the Cartesian k-grid (cloud-in-cell
/// with accumulated-weight normalization, zero-fill elsewhere) and invert by
/// [`cone_idft`]. Only meaningful for non-dispersive data where `χ̃` depends
/// on `(ω, θ)` through `k` alone.
pub fn cone_inversion(samples: &ChiTildeSamples, kgrid: &KGrid, units: Units) -> Result<ConeReconstruction> {
    let n = kgrid.n;
    let nd = samples.directions.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n * n * n];
    let mut weight = vec![0.0f64; n * n * n];
    let mut used = 0usize;
    for ki in 0..samples.grid.len() {
        let omega = samples.grid.omega(ki);
        for d in 0..nd {
            if !samples.is_usable(ki, d) {
                continue;
            }
            let (k, in_cone) = cone_coverage(&samples.directions[d], omega, units);
            if !in_cone {
                continue;
            }
            let c = kgrid.coords(&k);
            let base = c.map(|v| v.floor());
            if base.iter().any(|&b| b < 0.0 || b as usize + 1 >= n) {
                continue; // outside the k-grid
            }
            let frac = c - base;
            let value = samples.value(ki, d);
            used += 1;
            for di in 0..2 {
                for dj in 0..2 {
                    for dk in 0..2 {
                        let w = (if di == 0 { 1.0 - frac[0] } else { frac[0] })
                            * (if dj == 0 { 1.0 - frac[1] } else { frac[1] })
                            * (if dk == 0 { 1.0 - frac[2] } else { frac[2] });
                        let idx = ((base[0] as usize + di) * n + base[1] as usize + dj) * n
                            + base[2] as usize
                            + dk;
                        acc[idx] += value * w;
                        weight[idx] += w;
                    }
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::DegenerateData("no usable in-cone samples to regrid".into()));
    }
    let mut filled = vec![false; n * n * n];
    for idx in 0..n * n * n {
        if weight[idx] > 0.0 {
            acc[idx] /= weight[idx];
            filled[idx] = true;
        }
    }
    // coverage over the in-cone part of the k-grid
    let dk = kgrid.delta_k();
    let mut in_cone_bins = 0usize;
    let mut in_cone_filled = 0usize;
    for idx in 0..n * n * n {
        let (i, rem) = (idx / (n * n), idx % (n * n));
        let (j, k) = (rem / n, rem % n);
        let kv = Vector3::new(
            (i as f64 - n as f64 / 2.0) * dk,
            (j as f64 - n as f64 / 2.0) * dk,
            (k as f64 - n as f64 / 2.0) * dk,
        );
        let nn = kv.norm();
        if nn > 0.0 && (kv[2] / nn).clamp(-1.0, 1.0).acos() < std::f64::consts::FRAC_PI_4 {
            in_cone_bins += 1;
            if filled[idx] {
                in_cone_filled += 1;
            }
        }
    }
    let (field, imag_residual) = cone_idft(&acc, kgrid)?;
    Ok(ConeReconstruction {
        field,
        imag_residual,
        filled_bins: filled,
        coverage: if in_cone_bins > 0 { in_cone_filled as f64 / in_cone_bins as f64 } else { 0.0 },
        kgrid: kgrid.clone(),
    })
}
