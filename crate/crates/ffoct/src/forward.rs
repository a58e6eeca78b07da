//! Forward model: incident and mirror reference fields, the far-field Born
//! scattered spectrum, an exact dyadic-Green evaluation used to validate the
//! far-field asymptotics, and synthesis of the interferometric measurements.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FrequencyGrid, Geometry, Phantom, Pulse, Units};

/// `θ × (θ × v)` for a complex vector `v`; annihilates the `θ` component.
pub fn theta_cross_cross(theta: &Vector3<f64>, v: &Vector3<Complex64>) -> Vector3<Complex64> {
    let tc = theta.map(|x| Complex64::new(x, 0.0));
    let dot = tc.x * v.x + tc.y * v.y + tc.z * v.z;
    Vector3::new(tc.x * dot - v.x, tc.y * dot - v.y, tc.z * dot - v.z)
}

/// Pairwise (cascade) summation; fixed order, run-to-run stable.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Incident field spectrum `Ê⁰(ω, x) = f̂(ω) e^{-iωx₃/c} p`.
pub fn incident_spectrum(
    pulse: &Pulse,
    omega: f64,
    x: &Vector3<f64>,
    p: &Vector3<f64>,
    units: Units,
) -> Vector3<Complex64> {
    let phase = pulse.spectrum(omega) * Complex64::from_polar(1.0, -omega * x[2] / units.c);
    p.map(|comp| phase * comp)
}

/// Time-domain field reflected by the ideal mirror at position `r`:
/// `(f(t + x₃/c) - f(t + x₃/c + 2(r - x₃)/c)) p` above the mirror, zero below.
pub fn mirror_field(
    pulse: &Pulse,
    r: f64,
    t: f64,
    x: &Vector3<f64>,
    p: &Vector3<f64>,
    units: Units,
) -> Vector3<f64> {
    if x[2] <= r {
        return Vector3::zeros();
    }
    let c = units.c;
    let amp = pulse.sample(t + x[2] / c) - pulse.sample(t + x[2] / c + 2.0 * (r - x[2]) / c);
    p * amp
}

fn matrix_vector(m: &Matrix3<Complex64>, p: &Vector3<f64>) -> Vector3<Complex64> {
    let pc = p.map(|x| Complex64::new(x, 0.0));
    Vector3::new(
        m[(0, 0)] * pc.x + m[(0, 1)] * pc.y + m[(0, 2)] * pc.z,
        m[(1, 0)] * pc.x + m[(1, 1)] * pc.y + m[(1, 2)] * pc.z,
        m[(2, 0)] * pc.x + m[(2, 1)] * pc.y + m[(2, 2)] * pc.z,
    )
}

/// Far-field Born scattered spectrum at the detector `x = ρθ`:
///
/// `(Ê - Ê⁰)(ω, ρθ) = -(ω² e^{iωρ/c} / (4πρc²)) f̂(ω)
///     ∫ θ×(θ×(χ̂(ω,y) p)) e^{-i(ω/c)<θ+e₃, y>} dy`
///
/// The spatial integral uses the closed form for analytic blob phantoms and
/// midpoint voxel quadrature otherwise; scalar phantoms act on `p` by
/// multiplication.
pub fn born_farfield(
    phantom: &Phantom,
    pulse: &Pulse,
    omega: f64,
    theta: &Vector3<f64>,
    rho: f64,
    p: &Vector3<f64>,
    units: Units,
) -> Result<Vector3<Complex64>> {
    if omega == 0.0 {
        return Err(Error::InvalidArgument("born_farfield requires omega != 0".into()));
    }
    if theta[2] <= 0.0 {
        return Err(Error::InvalidArgument("detector direction must have theta3 > 0".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument("detector distance rho must be positive".into()));
    }
    let c = units.c;
    let k = (theta + Vector3::new(0.0, 0.0, 1.0)) * (omega / c);
    let prefactor = Complex64::from_polar(
        omega * omega / (4.0 * std::f64::consts::PI * rho * c * c),
        omega * rho / c + std::f64::consts::PI, // the overall minus sign
    ) * pulse.spectrum(omega);

    let vector_part = match phantom {
        Phantom::GaussianBlobs(_) | Phantom::ScalarVoxels(_) | Phantom::DispersiveScalar(_) => {
            let chi = phantom.chi_tilde_scalar(omega, &k)?;
            theta_cross_cross(theta, &p.map(|x| Complex64::new(x, 0.0))).map(|v| v * chi)
        }
        Phantom::AnisotropicVoxels(g) => {
            let m = g.spatial_fourier(&k);
            theta_cross_cross(theta, &matrix_vector(&m, p))
        }
        Phantom::DispersiveAnisotropic(b) => {
            let mut acc = Matrix3::<Complex64>::zeros();
            let vol = b.grid.spacing.powi(3);
            for (m, voxels) in b.bin_values.iter().enumerate() {
                let tfac = b.bins.bin_spectrum(m, omega);
                let mut idx = 0;
                for i in 0..b.grid.shape[0] {
                    for j in 0..b.grid.shape[1] {
                        for kk in 0..b.grid.shape[2] {
                            let mat = &voxels[idx];
                            idx += 1;
                            let y = b.grid.voxel_center(i, j, kk);
                            let phase = tfac * Complex64::from_polar(vol, -k.dot(&y));
                            for r in 0..3 {
                                for cidx in 0..3 {
                                    acc[(r, cidx)] += phase * mat[(r, cidx)];
                                }
                            }
                        }
                    }
                }
            }
            theta_cross_cross(theta, &matrix_vector(&acc, p))
        }
        Phantom::Layered(_) => {
            return Err(Error::DataMismatch(
                "layered phantoms use the axial trace path, not the far-field synthesis".into(),
            ))
        }
    };
    Ok(vector_part.map(|v| v * prefactor))
}

/// A compactly supported complex 3-vector field on a voxel grid, the test
/// charge for [`dyadic_green_field`].
#[derive(Debug, Clone)]
pub struct VectorField {
    pub origin: Vector3<f64>,
    pub spacing: f64,
    pub shape: [usize; 3],
    pub values: Vec<Vector3<f64>>,
}

impl VectorField {
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin
            + Vector3::new(
                (i as f64 + 0.5) * self.spacing,
                (j as f64 + 0.5) * self.spacing,
                (k as f64 + 0.5) * self.spacing,
            )
    }
}

/// Exact second derivatives of `Γ(x) = e^{ia|x|}/|x|`, assembled into the
/// dyadic kernel `a² δ_{jk} Γ + ∂²Γ/∂x_j ∂x_k` applied to a vector weight.
fn dyadic_kernel_apply(a: f64, r: &Vector3<f64>, phi: &Vector3<f64>) -> Vector3<Complex64> {
    let n = r.norm();
    let exp = Complex64::from_polar(1.0, a * n);
    let gamma = exp / n;
    let ia = Complex64::new(0.0, a);
    // scalar coefficients of delta_{jk} and of r_j r_k
    let c_delta = (ia / (n * n) - 1.0 / (n * n * n)) * exp;
    let c_rr = ((ia / (n * n) - 1.0 / (n * n * n)) * ia / n
        + (-2.0 * ia / (n * n * n) + 3.0 / (n * n * n * n)) / n)
        * exp;
    let r_dot_phi = r.dot(phi);
    let lead = Complex64::new(a * a, 0.0) * gamma + c_delta;
    Vector3::new(
        lead * phi.x + c_rr * (r.x * r_dot_phi),
        lead * phi.y + c_rr * (r.y * r_dot_phi),
        lead * phi.z + c_rr * (r.z * r_dot_phi),
    )
}

/// `(a² 𝟙 + grad div) ∫ Γ(x - y) φ(y) dy` with the analytic kernel; the
/// exact counterpart of the far-field expression, used as convergence oracle.
///
/// `x` must keep at least one voxel distance from the support of `φ`.
pub fn dyadic_green_field(phi: &VectorField, a: f64, x: &Vector3<f64>) -> Result<Vector3<Complex64>> {
    let vol = phi.spacing.powi(3);
    let mut terms = Vec::new();
    for i in 0..phi.shape[0] {
        for j in 0..phi.shape[1] {
            for k in 0..phi.shape[2] {
                let w = &phi.values[(i * phi.shape[1] + j) * phi.shape[2] + k];
                if w.norm() == 0.0 {
                    continue;
                }
                let y = phi.voxel_center(i, j, k);
                let r = x - y;
                if r.norm() <= phi.spacing {
                    return Err(Error::InvalidArgument(
                        "evaluation point touches the support of phi; kernel is singular".into(),
                    ));
                }
                terms.push(dyadic_kernel_apply(a, &r, w).map(|v| v * vol));
            }
        }
    }
    let xs: Vec<Complex64> = terms.iter().map(|t| t.x).collect();
    let ys: Vec<Complex64> = terms.iter().map(|t| t.y).collect();
    let zs: Vec<Complex64> = terms.iter().map(|t| t.z).collect();
    Ok(Vector3::new(pairwise_sum(&xs), pairwise_sum(&ys), pairwise_sum(&zs)))
}

/// Leading far-field term of [`dyadic_green_field`]:
/// `-(a² e^{iaρ}/ρ) ∫ θ×(θ×φ(y)) e^{-ia<θ,y>} dy`.
pub fn dyadic_green_farfield(phi: &VectorField, a: f64, rho: f64, theta: &Vector3<f64>) -> Vector3<Complex64> {
    let vol = phi.spacing.powi(3);
    let mut acc = Vector3::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for i in 0..phi.shape[0] {
        for j in 0..phi.shape[1] {
            for k in 0..phi.shape[2] {
                let w = &phi.values[(i * phi.shape[1] + j) * phi.shape[2] + k];
                if w.norm() == 0.0 {
                    continue;
                }
                let y = phi.voxel_center(i, j, k);
                let phase = Complex64::from_polar(vol, -a * theta.dot(&y));
                let tcc = theta_cross_cross(theta, &w.map(|v| Complex64::new(v, 0.0)));
                acc += tcc.map(|v| v * phase);
            }
        }
    }
    let pref = Complex64::from_polar(a * a / rho, a * rho + std::f64::consts::PI);
    acc.map(|v| v * pref)
}

/// Scattered spectrum `(Ê - Ê⁰)(ω, x)` sampled on the frequency grid at the
/// detector points, indexed `[ω][detector]`.
#[derive(Debug, Clone)]
pub struct ScatteredSpectrum {
    pub grid: FrequencyGrid,
    pub directions: Vec<Vector3<f64>>,
    pub values: Vec<Vector3<Complex64>>,
}

impl ScatteredSpectrum {
    pub fn value(&self, omega_idx: usize, det_idx: usize) -> &Vector3<Complex64> {
        &self.values[omega_idx * self.directions.len() + det_idx]
    }

    /// Largest violation of the Hermitian pairing `V(-ω) = conj(V(ω))`,
    /// relative to the peak magnitude.
    pub fn hermitian_residual(&self) -> f64 {
        let ndet = self.directions.len();
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 0..self.grid.len() {
            let km = self.grid.mirror_index(k);
            for d in 0..ndet {
                let a = self.value(k, d);
                let b = self.value(km, d);
                let diff = (a.map(|v| v.conj()) - b).norm();
                worst = worst.max(diff / peak);
            }
        }
        worst
    }
}

/// Interferometric measurements `M[r, detector, j]`, `j ∈ {1, 2}` (the third
/// polarization component vanishes structurally since `p₃ = 0`).
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub geometry: Geometry,
    pub pulse: Pulse,
    pub units: Units,
    /// Row-major over `(mirror, detector, j)`.
    pub values: Vec<f64>,
    /// Largest imaginary part discarded by Hermitian symmetrization,
    /// relative to the peak measurement.
    pub imag_residual: f64,
}

impl MeasurementSet {
    pub fn value(&self, mirror_idx: usize, det_idx: usize, j: usize) -> f64 {
        debug_assert!(j < 2);
        let ndet = self.geometry.detector_directions.len();
        self.values[(mirror_idx * ndet + det_idx) * 2 + j]
    }

    pub fn n_mirrors(&self) -> usize {
        self.geometry.mirror_positions.len()
    }

    pub fn n_detectors(&self) -> usize {
        self.geometry.detector_directions.len()
    }
}

/// Scattered spectra at every detector point for the grid paired with the
/// mirror sweep.
pub fn scattered_spectrum(
    phantom: &Phantom,
    pulse: &Pulse,
    geometry: &Geometry,
    units: Units,
) -> Result<ScatteredSpectrum> {
    geometry.check_phantom(phantom)?;
    let grid = FrequencyGrid::for_geometry(geometry, units)?;
    let ndet = geometry.detector_directions.len();
    let n = grid.len();
    let values: Vec<Vector3<Complex64>> = (0..n * ndet)
        .into_par_iter()
        .map(|idx| {
            let k = idx / ndet;
            let d = idx % ndet;
            let theta = &geometry.detector_directions[d];
            let rho = geometry.d / theta[2];
            born_farfield(phantom, pulse, grid.omega(k), theta, rho, &geometry.polarization, units)
        })
        .collect::<Result<_>>()?;
    Ok(ScatteredSpectrum { grid, directions: geometry.detector_directions.clone(), values })
}

/// Synthesize the measurement set
/// `M_{r,j}(x) = -(p_j/2π) ∫ (Ê_j - Ê_j⁰)(ω, x) f̂(-ω) e^{iω(2r - x₃)/c} dω`
/// as a scaled sum over the frequency grid. The ω grid is the exact discrete
/// Fourier partner of the mirror grid, so the measurement operator inverts
/// without interpolation. Hermitian pairing makes the result real; the
/// discarded imaginary part is reported.
pub fn synthesize_measurements(
    phantom: &Phantom,
    pulse: &Pulse,
    geometry: &Geometry,
    units: Units,
) -> Result<MeasurementSet> {
    let spectrum = scattered_spectrum(phantom, pulse, geometry, units)?;
    measurements_from_spectrum(&spectrum, pulse, geometry, units)
}

/// The measurement operator applied to a given scattered spectrum.
pub fn measurements_from_spectrum(
    spectrum: &ScatteredSpectrum,
    pulse: &Pulse,
    geometry: &Geometry,
    units: Units,
) -> Result<MeasurementSet> {
    let grid = &spectrum.grid;
    if spectrum.directions.len() != geometry.detector_directions.len() {
        return Err(Error::Config("spectrum and geometry disagree on detector count".into()));
    }
    if grid.len() != geometry.mirror_positions.len() {
        return Err(Error::Config(
            "frequency grid and mirror grid must have matching lengths".into(),
        ));
    }
    let c = units.c;
    let p = geometry.polarization;
    let ndet = geometry.detector_directions.len();
    let nmir = geometry.mirror_positions.len();
    let fhat_neg: Vec<Complex64> = (0..grid.len()).map(|k| pulse.spectrum(-grid.omega(k))).collect();

    let rows: Vec<(Vec<f64>, f64)> = (0..nmir * ndet)
        .into_par_iter()
        .map(|idx| {
            let m = idx / ndet;
            let d = idx % ndet;
            let r = geometry.mirror_positions[m];
            let x3 = geometry.d; // detector plane
            let mut out = vec![0.0f64; 2];
            let mut resid = 0.0f64;
            for j in 0..2 {
                let terms: Vec<Complex64> = (0..grid.len())
                    .map(|k| {
                        let omega = grid.omega(k);
                        let v = spectrum.value(k, d)[j];
                        v * fhat_neg[k] * Complex64::from_polar(1.0, omega * (2.0 * r - x3) / c)
                    })
                    .collect();
                let sum = pairwise_sum(&terms)
                    * Complex64::new(-p[j] / (2.0 * std::f64::consts::PI) * grid.delta_omega(), 0.0);
                out[j] = sum.re;
                resid = resid.max(sum.im.abs());
            }
            (out, resid)
        })
        .collect();

    let mut values = Vec::with_capacity(nmir * ndet * 2);
    let mut resid = 0.0f64;
    for (row, r) in rows {
        values.extend_from_slice(&row);
        resid = resid.max(r);
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let imag_residual = if peak > 0.0 { resid / peak } else { 0.0 };
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("measurement synthesis produced non-finite values".into()));
    }
    Ok(MeasurementSet { geometry: geometry.clone(), pulse: pulse.clone(), units, values, imag_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_gaussian_phantom, make_pulse, PulseKind, ScalarGrid};

    fn test_geometry(ndet: usize) -> Geometry {
        let mirrors = Geometry::uniform_mirrors(20.0, 0.125, 64);
        Geometry::new(
            60.0,
            20.0,
            8.0,
            mirrors,
            Geometry::direction_grid(ndet, 0.25),
            Vector3::new(1.0, 1.0, 0.0),
        )
        .unwrap()
    }

    fn test_pulse(geo: &Geometry) -> Pulse {
        make_pulse(PulseKind::GaussianWindowedCosine, 2.0 * std::f64::consts::PI, 1.5, geo, Units::default()).unwrap()
    }

    fn single_voxel_phantom(chi0: f64, y0: Vector3<f64>, spacing: f64) -> Phantom {
        Phantom::ScalarVoxels(ScalarGrid {
            origin: y0 - Vector3::repeat(spacing / 2.0),
            spacing,
            shape: [1, 1, 1],
            values: vec![chi0],
        })
    }

    #[test]
    fn incident_spectrum_matches_dft_oracle() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let p = Vector3::new(1.0, 0.0, 0.0);
        let x = Vector3::new(0.0, 0.0, geo.d);
        let w0 = 2.0 * std::f64::consts::PI;
        let got = incident_spectrum(&pulse, w0, &x, &p, Units::default());
        // independent direct DFT of the samples
        let mut fhat = Complex64::new(0.0, 0.0);
        for (k, v) in pulse.values().iter().enumerate() {
            let t = pulse.t0() + k as f64 * pulse.dt();
            fhat += Complex64::from_polar(*v, w0 * t);
        }
        fhat *= pulse.dt();
        let want = fhat * Complex64::from_polar(1.0, -w0 * geo.d);
        assert!((got.x - want).norm() <= 1e-12 * want.norm());
        assert!(got.y.norm() == 0.0 && got.z.norm() == 0.0);

        // zero polarization
        let z = incident_spectrum(&pulse, w0, &x, &Vector3::zeros(), Units::default());
        assert!(z.norm() == 0.0);
    }

    #[test]
    fn mirror_field_cases() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let p = Vector3::new(1.0, 0.0, 0.0);
        let u = Units::default();
        // below the mirror: zero
        let below = mirror_field(&pulse, 5.0, 1.0, &Vector3::new(0.0, 0.0, 4.0), &p, u);
        assert_eq!(below, Vector3::zeros());
        // both pulse arguments outside the support: zero
        let far = mirror_field(&pulse, 5.0, 1e6, &Vector3::new(0.0, 0.0, 10.0), &p, u);
        assert_eq!(far, Vector3::zeros());
        // on the detector plane for t >= 0 the direct term vanishes, leaving
        // -f(t + (2r - d)/c) p
        let r = 10.0;
        let x = Vector3::new(0.0, 0.0, geo.d);
        let (lo, hi) = pulse.support();
        let mid = 0.5 * (lo + hi);
        let t = mid - (2.0 * r - geo.d); // puts the reflected term mid-support
        assert!(t >= 0.0);
        let got = mirror_field(&pulse, r, t, &x, &p, u);
        let want = -pulse.sample(t + (2.0 * r - geo.d)) * p;
        assert!(pulse.sample(t + geo.d).abs() == 0.0); // direct term outside support
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-30));
    }

    #[test]
    fn born_farfield_zero_phantom() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let phantom = make_gaussian_phantom(&[Vector3::new(0.0, 0.0, 2.0)], &[0.5], &[0.0]).unwrap();
        let theta = Vector3::new(0.0, 0.0, 1.0);
        let v = born_farfield(&phantom, &pulse, 3.0, &theta, 50.0, &geo.polarization, Units::default()).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn born_farfield_rejects_zero_frequency() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let phantom = make_gaussian_phantom(&[Vector3::new(0.0, 0.0, 2.0)], &[0.5], &[1.0]).unwrap();
        let theta = Vector3::new(0.0, 0.0, 1.0);
        assert!(born_farfield(&phantom, &pulse, 0.0, &theta, 50.0, &geo.polarization, Units::default()).is_err());
    }

    #[test]
    fn born_farfield_single_voxel_closed_form() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let u = Units::default();
        let chi0 = 0.7;
        let y0 = Vector3::new(0.4, -0.3, 2.0);
        let spacing = 0.05;
        let phantom = single_voxel_phantom(chi0, y0, spacing);
        let omega = 5.1;
        let theta = Vector3::new(0.1, 0.2, 1.0).normalize();
        let rho = 200.0;
        let p = geo.polarization;
        let got = born_farfield(&phantom, &pulse, omega, &theta, rho, &p, u).unwrap();
        // hand-rolled single-term quadrature
        let vol = spacing.powi(3);
        let k = (theta + Vector3::new(0.0, 0.0, 1.0)) * omega;
        let pref = -Complex64::from_polar(
            omega * omega / (4.0 * std::f64::consts::PI * rho),
            omega * rho,
        ) * pulse.spectrum(omega);
        let want = theta_cross_cross(&theta, &p.map(|v| Complex64::new(v, 0.0)))
            .map(|v| v * pref * chi0 * vol * Complex64::from_polar(1.0, -k.dot(&y0)));
        assert!((got - want).norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn born_farfield_blob_matches_closed_form_transform() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let u = Units::default();
        let phantom = make_gaussian_phantom(&[Vector3::new(0.2, 0.1, 2.0)], &[0.6], &[0.9]).unwrap();
        // voxelized copy checked against the analytic route
        let set = match &phantom {
            Phantom::GaussianBlobs(s) => s.clone(),
            _ => unreachable!(),
        };
        let n = 48;
        let half = 3.9;
        let grid = set.rasterize(Vector3::new(0.2 - half, 0.1 - half, 2.0 - half), 2.0 * half / n as f64, [n, n, n]);
        let voxel_phantom = Phantom::ScalarVoxels(grid);
        let omega = 4.0;
        let theta = Vector3::new(-0.1, 0.15, 1.0).normalize();
        let rho = 300.0;
        let a = born_farfield(&phantom, &pulse, omega, &theta, rho, &geo.polarization, u).unwrap();
        let b = born_farfield(&voxel_phantom, &pulse, omega, &theta, rho, &geo.polarization, u).unwrap();
        assert!((a - b).norm() <= 1e-3 * a.norm());
    }

    #[test]
    fn born_farfield_transversality() {
        let geo = test_geometry(1);
        let pulse = test_pulse(&geo);
        let phantom = make_gaussian_phantom(&[Vector3::new(0.0, 0.4, 2.2)], &[0.5], &[1.2]).unwrap();
        for theta in [
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.3, -0.2, 1.0).normalize(),
        ] {
            let v = born_farfield(&phantom, &pulse, 6.0, &theta, 80.0, &geo.polarization, Units::default()).unwrap();
            let along = (v.x * theta.x + v.y * theta.y + v.z * theta.z).norm();
            assert!(along <= 1e-12 * v.norm());
        }
    }

    #[test]
    fn dyadic_green_zero_field() {
        let phi = VectorField {
            origin: Vector3::zeros(),
            spacing: 0.1,
            shape: [2, 2, 2],
            values: vec![Vector3::zeros(); 8],
        };
        let v = dyadic_green_field(&phi, 2.0, &Vector3::new(0.0, 0.0, 10.0)).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn dyadic_green_rejects_touching_point() {
        let phi = VectorField {
            origin: Vector3::new(-0.05, -0.05, -0.05),
            spacing: 0.1,
            shape: [1, 1, 1],
            values: vec![Vector3::new(1.0, 0.0, 0.0)],
        };
        assert!(dyadic_green_field(&phi, 2.0, &Vector3::new(0.0, 0.0, 0.05)).is_err());
    }

    #[test]
    fn dyadic_green_single_voxel_axial_value() {
        // a = 2 pi, phi = e1 V at origin, x = (0, 0, rho):
        // leading term (a^2 e^{ia rho} / rho) V e1 since e3 x (e3 x e1) = -e1.
        let a = 2.0 * std::f64::consts::PI;
        let spacing = 0.02;
        let vol = spacing * spacing * spacing;
        let phi = VectorField {
            origin: Vector3::repeat(-spacing / 2.0),
            spacing,
            shape: [1, 1, 1],
            values: vec![Vector3::new(1.0, 0.0, 0.0)],
        };
        let rho = 400.0;
        let got = dyadic_green_field(&phi, a, &Vector3::new(0.0, 0.0, rho)).unwrap();
        let want = Complex64::from_polar(a * a / rho, a * rho) * vol;
        assert!((got.x - want).norm() <= 2.0 / (a * rho) * want.norm());
        assert!(got.y.norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn dyadic_green_farfield_slope() {
        // relative deviation from the far-field formula decays like 1/rho
        let a = 2.0 * std::f64::consts::PI;
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
        let phi = VectorField {
            origin: Vector3::repeat(-1.5 * spacing),
            spacing,
            shape: [n, n, n],
            values,
        };
        let theta = Vector3::new(0.2, -0.1, 1.0).normalize();
        let rhos = [50.0, 100.0, 200.0, 400.0];
        let errs: Vec<f64> = rhos
            .iter()
            .map(|&rho| {
                let exact = dyadic_green_field(&phi, a, &(theta * rho)).unwrap();
                let ff = dyadic_green_farfield(&phi, a, rho, &theta);
                (exact - ff).norm() / ff.norm()
            })
            .collect();
        let slope = crate::loglog_slope(&rhos, &errs);
        assert!((slope + 1.0).abs() <= 0.1, "slope = {slope}, errs = {errs:?}");
    }

    #[test]
    fn measurements_zero_phantom_and_linearity() {
        let geo = test_geometry(3);
        let pulse = test_pulse(&geo);
        let u = Units::default();
        let zero = make_gaussian_phantom(&[Vector3::new(0.0, 0.0, 2.0)], &[0.5], &[0.0]).unwrap();
        let m0 = synthesize_measurements(&zero, &pulse, &geo, u).unwrap();
        assert!(m0.values.iter().all(|v| *v == 0.0));

        let alpha = 3.7;
        let p1 = make_gaussian_phantom(&[Vector3::new(0.3, -0.2, 2.0)], &[0.5], &[1.0]).unwrap();
        let p2 = make_gaussian_phantom(&[Vector3::new(0.3, -0.2, 2.0)], &[0.5], &[alpha]).unwrap();
        let m1 = synthesize_measurements(&p1, &pulse, &geo, u).unwrap();
        let m2 = synthesize_measurements(&p2, &pulse, &geo, u).unwrap();
        let peak = m2.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in m1.values.iter().zip(&m2.values) {
            assert!((alpha * a - b).abs() <= 1e-12 * peak);
        }
        assert!(m1.imag_residual <= 1e-10);
    }

    #[test]
    fn measurements_peak_near_scatterer_depth() {
        // single voxel at depth z0, axial detector: |M(r, e3)| peaks within a
        // pulse width of z0; checked against an independent time-domain
        // oracle that correlates f'' with f.
        let z0 = 3.0;
        let mirrors = Geometry::uniform_mirrors(20.0, 0.125, 256);
        let geo = Geometry::new(
            60.0,
            20.0,
            8.0,
            mirrors,
            vec![Vector3::new(0.0, 0.0, 1.0)],
            Vector3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        let pulse = test_pulse(&geo);
        let u = Units::default();
        let phantom = single_voxel_phantom(1.0, Vector3::new(0.0, 0.0, z0), 0.05);
        let m = synthesize_measurements(&phantom, &pulse, &geo, u).unwrap();
        let (best, _) = geo
            .mirror_positions
            .iter()
            .enumerate()
            .map(|(i, _)| (i, m.value(i, 0, 0).abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let r_peak = geo.mirror_positions[best];
        let pulse_width = pulse.support().1 - pulse.support().0;
        assert!(
            (r_peak - z0).abs() <= pulse_width,
            "peak at r = {r_peak}, expected near {z0}"
        );

        // oracle: M(r) ∝ ∫ f''(t - a) f(t + 2r - d) dt with a = d - 2 z0;
        // peak of the correlation envelope sits at r = z0.
        let dt = pulse.dt();
        let nf = pulse.values().len();
        let fpp: Vec<f64> = (0..nf)
            .map(|i| {
                if i == 0 || i == nf - 1 {
                    0.0
                } else {
                    (pulse.values()[i + 1] - 2.0 * pulse.values()[i] + pulse.values()[i - 1]) / (dt * dt)
                }
            })
            .collect();
        let mut best_r = 0.0;
        let mut best_v = 0.0f64;
        for &r in &geo.mirror_positions {
            let shift = (geo.d - 2.0 * z0) - (geo.d - 2.0 * r); // lag between the two factors
            let mut acc = 0.0;
            for i in 0..nf {
                let t = pulse.t0() + i as f64 * dt - shift;
                acc += fpp[i] * pulse.sample(t) * dt;
            }
            if acc.abs() > best_v {
                best_v = acc.abs();
                best_r = r;
            }
        }
        assert!((best_r - z0).abs() <= pulse_width);
        assert!((best_r - r_peak).abs() <= pulse_width / 2.0);
    }
}
