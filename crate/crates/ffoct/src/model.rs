//! Domain types shared by the forward and inversion modules: unit
//! conventions, illumination pulses, acquisition geometry and susceptibility
//! phantoms.
//!
//! Unit convention: the wave speed defaults to `c = 1` and all lengths are
//! expressed in units of the centre wavelength. The Fourier convention is
//! fixed crate-wide to `f̂(ω) = ∫ f(t) e^{+iωt} dt` with the inverse carrying
//! the `1/(2π)` factor; every discrete transform applies the `Δt`/`Δω`
//! factors explicitly to match this continuum convention.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a sampled pulse counts as vanished.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Effective support radius of a Gaussian blob, in units of its width.
/// Beyond this radius the blob is below 1e-16 of its peak.
pub const BLOB_SUPPORT_WIDTHS: f64 = 9.0;

/// Physical unit conventions, reduced to the wave speed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Units {
    /// Wave speed (length/time).
    pub c: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { c: 1.0 }
    }
}

impl Units {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("wave speed must be positive, got {c}")));
        }
        Ok(Units { c })
    }
}

// ---------------------------------------------------------------------------
// Pulse
// ---------------------------------------------------------------------------

/// Axial envelope `f(t)` of the illumination, sampled on a uniform time grid.
///
/// The samples are real and must vanish outside the declared support window
/// `(R/c, R/c + 2δ/c)`; the spectrum is the scaled discrete sum
/// `f̂(ω) = Σ f(t_k) e^{iωt_k} Δt`, which satisfies `f̂(−ω) = conj(f̂(ω))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pulse {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    support: (f64, f64),
}

/// Analytic shape used by [`make_pulse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    /// Gaussian envelope times a carrier cosine.
    GaussianWindowedCosine,
    /// Raised-cosine (Hann) envelope times a carrier cosine; compactly
    /// supported by construction.
    RaisedCosine,
}

impl Pulse {
    /// Wrap uniform samples, checking the support invariant.
    pub fn from_samples(t0: f64, dt: f64, values: Vec<f64>, support: (f64, f64)) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(Error::InvalidArgument("pulse needs a positive time step and samples".into()));
        }
        if !(support.0 < support.1) {
            return Err(Error::InvalidArgument("pulse support interval is empty".into()));
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::InvalidArgument("pulse is identically zero".into()));
        }
        for (k, v) in values.iter().enumerate() {
            let t = t0 + k as f64 * dt;
            if (t <= support.0 || t >= support.1) && v.abs() > SUPPORT_TOL * peak {
                return Err(Error::InvalidArgument(format!(
                    "pulse does not vanish outside its support window: |f({t})| = {} > {} * peak",
                    v.abs(),
                    SUPPORT_TOL
                )));
            }
        }
        Ok(Pulse { t0, dt, values, support })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Declared support window `(R/c, R/c + 2δ/c)`.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Sample `f(t)` by linear interpolation; zero outside the grid.
    pub fn sample(&self, t: f64) -> f64 {
        let s = (t - self.t0) / self.dt;
        if s < 0.0 || s > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Spectrum `f̂(ω) = Σ f(t_k) e^{iωt_k} Δt`.
    pub fn spectrum(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            let t = self.t0 + k as f64 * self.dt;
            acc += Complex64::from_polar(*v, omega * t);
        }
        acc * self.dt
    }

    /// Largest spectral magnitude on the given grid; used for masking.
    pub fn spectrum_peak(&self, grid: &FrequencyGrid) -> f64 {
        grid.omegas().iter().fold(0.0f64, |m, &w| m.max(self.spectrum(w).norm()))
    }
}

/// Build a band-limited pulse that fits the support window of the geometry.
///
/// `center_freq` is the carrier angular frequency and `bandwidth` sets the
/// envelope scale (`1/bandwidth` in time). The envelope is centred in the
/// window `(R/c, R/c + 2δ/c)`; if it would not decay below [`SUPPORT_TOL`]
/// inside the window, an error reports the violating extent.
pub fn make_pulse(
    kind: PulseKind,
    center_freq: f64,
    bandwidth: f64,
    geometry: &Geometry,
    units: Units,
) -> Result<Pulse> {
    if !(center_freq > 0.0) || !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument("pulse frequencies must be positive".into()));
    }
    let c = units.c;
    let half_window = geometry.delta / c;
    let t_center = (geometry.r_max + geometry.delta) / c;
    let support = (geometry.r_max / c, (geometry.r_max + 2.0 * geometry.delta) / c);

    // Extent needed for the envelope to fall below the support tolerance.
    let half_extent = match kind {
        // exp(-x^2/2) <= 1e-13 at x ~ 7.74
        PulseKind::GaussianWindowedCosine => 7.74 / bandwidth,
        PulseKind::RaisedCosine => 5.0 / bandwidth,
    };
    if half_extent > half_window {
        return Err(Error::InvalidArgument(format!(
            "pulse envelope needs a half-window of {half_extent} but the geometry allows {half_window}; \
             increase the bandwidth or the safety margin delta"
        )));
    }

    let omega_top = center_freq + 4.0 * bandwidth;
    let dt = (2.0 * std::f64::consts::PI / omega_top / 16.0).min(2.0 * half_window / 512.0);
    let n = (2.0 * half_window / dt).ceil() as usize + 1;
    let t0 = support.0;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        let u = t - t_center;
        let env = match kind {
            PulseKind::GaussianWindowedCosine => {
                let s = 1.0 / bandwidth;
                (-u * u / (2.0 * s * s)).exp()
            }
            PulseKind::RaisedCosine => {
                if u.abs() >= half_extent {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * u / half_extent).cos())
                }
            }
        };
        // Zero exactly at and beyond the window edges so the support
        // invariant holds regardless of rounding in the envelope tails.
        let env = if t <= support.0 || t >= support.1 { 0.0 } else { env };
        values.push(env * (center_freq * u).cos());
    }
    Pulse::from_samples(t0, dt, values, support)
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Acquisition geometry: detector plane, mirror sweep and polarization.
///
/// Detector points are generated from a grid of directions `θ ∈ S²₊` via
/// `x = (d/θ₃) θ`, so every detector lies on the plane `x₃ = d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Geometry {
    /// Detector plane height `d`.
    pub d: f64,
    /// Maximum mirror position `R`.
    pub r_max: f64,
    /// Safety margin `δ`.
    pub delta: f64,
    /// Sorted mirror positions, all `< R`.
    pub mirror_positions: Vec<f64>,
    /// Unit detector directions with positive third component.
    pub detector_directions: Vec<Vector3<f64>>,
    /// Illumination polarization `p` with `p₃ = 0`.
    pub polarization: Vector3<f64>,
}

impl Geometry {
    pub fn new(
        d: f64,
        r_max: f64,
        delta: f64,
        mirror_positions: Vec<f64>,
        detector_directions: Vec<Vector3<f64>>,
        polarization: Vector3<f64>,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Geometry(format!("delta must be positive, got {delta}")));
        }
        if !(r_max > delta && r_max < d - 2.0 * delta) {
            return Err(Error::Geometry(format!(
                "R = {r_max} must lie in (delta, d - 2 delta) = ({delta}, {})",
                d - 2.0 * delta
            )));
        }
        if mirror_positions.is_empty() {
            return Err(Error::Geometry("no mirror positions".into()));
        }
        if mirror_positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Geometry("mirror positions must be strictly increasing".into()));
        }
        if let Some(&top) = mirror_positions.last() {
            if top >= r_max {
                return Err(Error::Geometry(format!("mirror position {top} exceeds R = {r_max}")));
            }
        }
        if polarization[2] != 0.0 {
            return Err(Error::Geometry("polarization must satisfy p3 = 0".into()));
        }
        if polarization.norm() == 0.0 {
            return Err(Error::Geometry("polarization must be nonzero".into()));
        }
        if detector_directions.is_empty() {
            return Err(Error::Geometry("no detector directions".into()));
        }
        for theta in &detector_directions {
            if (theta.norm() - 1.0).abs() > 1e-10 || theta[2] <= 0.0 {
                return Err(Error::Geometry(format!(
                    "detector direction {theta:?} must be a unit vector with positive third component"
                )));
            }
        }
        Ok(Geometry { d, r_max, delta, mirror_positions, detector_directions, polarization })
    }

    /// Uniform mirror sweep with spacing `dr` ending just below `R`:
    /// `r_m = R - (n - m) dr`.
    pub fn uniform_mirrors(r_max: f64, dr: f64, n: usize) -> Vec<f64> {
        (0..n).map(|m| r_max - (n - m) as f64 * dr).collect()
    }

    /// Square grid of directions `θ = normalize((s₁, s₂, 1))` with slopes up
    /// to `max_slope` per transverse axis.
    pub fn direction_grid(n_per_axis: usize, max_slope: f64) -> Vec<Vector3<f64>> {
        let mut dirs = Vec::with_capacity(n_per_axis * n_per_axis);
        for i in 0..n_per_axis {
            for j in 0..n_per_axis {
                let frac = |k: usize| {
                    if n_per_axis == 1 {
                        0.0
                    } else {
                        2.0 * k as f64 / (n_per_axis - 1) as f64 - 1.0
                    }
                };
                let s = Vector3::new(max_slope * frac(i), max_slope * frac(j), 1.0);
                dirs.push(s / s.norm());
            }
        }
        dirs
    }

    /// Detector point on the plane `x₃ = d` for direction `θ`: `x = (d/θ₃) θ`.
    pub fn detector_point(&self, theta: &Vector3<f64>) -> Vector3<f64> {
        theta * (self.d / theta[2])
    }

    /// Spacing of the mirror grid, if uniform to 1e-9 relative.
    pub fn uniform_mirror_spacing(&self) -> Result<f64> {
        if self.mirror_positions.len() < 2 {
            return Err(Error::Config("mirror grid needs at least two positions".into()));
        }
        let dr = self.mirror_positions[1] - self.mirror_positions[0];
        for w in self.mirror_positions.windows(2) {
            if ((w[1] - w[0]) - dr).abs() > 1e-9 * dr.abs() {
                return Err(Error::Config("mirror grid is not uniform".into()));
            }
        }
        Ok(dr)
    }

    /// Reject phantoms that reach above `R - δ`.
    pub fn check_phantom(&self, phantom: &Phantom) -> Result<()> {
        let top = phantom.support_max_x3();
        if top >= self.r_max - self.delta {
            return Err(Error::Geometry(format!(
                "phantom support reaches x3 = {top}, which violates sup x3 < R - delta = {}",
                self.r_max - self.delta
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Frequency grid
// ---------------------------------------------------------------------------

/// Uniform angular-frequency grid, symmetric about zero and excluding zero.
///
/// The grid is derived from the mirror sweep through the duality `r ↔ 2ω/c`:
/// with `n` mirror positions of spacing `Δr`, the choice
/// `Δω = πc/(n Δr)` and half-integer offsets makes the measurement operator
/// and its inversion an exact discrete Fourier pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyGrid {
    delta_omega: f64,
    n: usize,
}

impl FrequencyGrid {
    pub fn from_mirror_grid(dr: f64, n: usize, c: f64) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::Config(format!("frequency grid size must be even and positive, got {n}")));
        }
        if !(dr > 0.0) {
            return Err(Error::Config("mirror spacing must be positive".into()));
        }
        Ok(FrequencyGrid { delta_omega: std::f64::consts::PI * c / (dr * n as f64), n })
    }

    pub fn for_geometry(geometry: &Geometry, units: Units) -> Result<Self> {
        let dr = geometry.uniform_mirror_spacing()?;
        Self::from_mirror_grid(dr, geometry.mirror_positions.len(), units.c)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    /// `ω_k = (k - n/2 + 1/2) Δω`; never zero, symmetric under `k ↔ n-1-k`.
    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 - self.n as f64 / 2.0 + 0.5) * self.delta_omega
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.omega(k)).collect()
    }

    /// Index of the frequency `-ω_k`.
    pub fn mirror_index(&self, k: usize) -> usize {
        self.n - 1 - k
    }
}

// ---------------------------------------------------------------------------
// Phantoms
// ---------------------------------------------------------------------------

/// Time-bin layout for dispersive phantoms: `count` uniform bins covering
/// `[0, t_max]`, values constant per bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeBins {
    pub t_max: f64,
    pub count: usize,
}

impl TimeBins {
    pub fn new(t_max: f64, count: usize) -> Result<Self> {
        if !(t_max > 0.0) || count == 0 {
            return Err(Error::InvalidArgument("time bins need t_max > 0 and count > 0".into()));
        }
        Ok(TimeBins { t_max, count })
    }

    pub fn width(&self) -> f64 {
        self.t_max / self.count as f64
    }

    pub fn center(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.width()
    }

    /// Exact Fourier transform of the indicator of bin `m` under the
    /// `e^{+iωτ}` convention: `Δτ · sinc(ωΔτ/2) · e^{iωτ_m}`.
    pub fn bin_spectrum(&self, m: usize, omega: f64) -> Complex64 {
        let w = self.width();
        let half = 0.5 * omega * w;
        let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
        Complex64::from_polar(w * sinc, omega * self.center(m))
    }
}

/// A Gaussian blob `a · exp(-|x - c|² / (2w²))`, whose spatial Fourier
/// transform `a (2π)^{3/2} w³ e^{-|k|²w²/2} e^{-i<k,c>}` is closed-form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianBlob {
    pub center: Vector3<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl GaussianBlob {
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let r2 = (x - self.center).norm_squared();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    pub fn spatial_fourier(&self, k: &Vector3<f64>) -> Complex64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mag = self.amplitude
            * two_pi.powf(1.5)
            * self.width.powi(3)
            * (-k.norm_squared() * self.width * self.width / 2.0).exp();
        Complex64::from_polar(mag, -k.dot(&self.center))
    }

    /// Plane integral over the plane at signed distance `s` from the center:
    /// `a · 2πw² · e^{-s²/(2w²)}`.
    pub fn plane_integral(&self, s: f64) -> f64 {
        self.amplitude
            * 2.0
            * std::f64::consts::PI
            * self.width
            * self.width
            * (-s * s / (2.0 * self.width * self.width)).exp()
    }
}

/// Sum of Gaussian blobs; the standard analytic test phantom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlobSet {
    pub blobs: Vec<GaussianBlob>,
}

impl BlobSet {
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        self.blobs.iter().map(|b| b.eval(x)).sum()
    }

    pub fn spatial_fourier(&self, k: &Vector3<f64>) -> Complex64 {
        self.blobs.iter().map(|b| b.spatial_fourier(k)).sum()
    }

    /// Sample onto a voxel grid (values at voxel centers).
    pub fn rasterize(&self, origin: Vector3<f64>, spacing: f64, shape: [usize; 3]) -> ScalarGrid {
        let mut values = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let x = origin
                        + Vector3::new(
                            (i as f64 + 0.5) * spacing,
                            (j as f64 + 0.5) * spacing,
                            (k as f64 + 0.5) * spacing,
                        );
                    values.push(self.eval(&x));
                }
            }
        }
        ScalarGrid { origin, spacing, shape, values }
    }
}

/// Real scalar susceptibility on a voxel grid; `values` is row-major in
/// `(i, j, k)` with voxel centers at `origin + (idx + 0.5) spacing`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub origin: Vector3<f64>,
    pub spacing: f64,
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin
            + Vector3::new(
                (i as f64 + 0.5) * self.spacing,
                (j as f64 + 0.5) * self.spacing,
                (k as f64 + 0.5) * self.spacing,
            )
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    /// Midpoint-rule spatial Fourier transform `Σ χ(y) e^{-i<k,y>} h³`.
    pub fn spatial_fourier(&self, k: &Vector3<f64>) -> Complex64 {
        let vol = self.spacing.powi(3);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0;
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                for kk in 0..self.shape[2] {
                    let v = self.values[idx];
                    idx += 1;
                    if v != 0.0 {
                        let y = self.voxel_center(i, j, kk);
                        acc += Complex64::from_polar(v, -k.dot(&y));
                    }
                }
            }
        }
        acc * vol
    }
}

/// Real 3×3 matrix susceptibility on a voxel grid (anisotropic medium).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixGrid {
    pub origin: Vector3<f64>,
    pub spacing: f64,
    pub shape: [usize; 3],
    pub values: Vec<Matrix3<f64>>,
}

impl MatrixGrid {
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin
            + Vector3::new(
                (i as f64 + 0.5) * self.spacing,
                (j as f64 + 0.5) * self.spacing,
                (k as f64 + 0.5) * self.spacing,
            )
    }

    /// Matrix-valued midpoint transform `Σ χ(y) e^{-i<k,y>} h³`.
    pub fn spatial_fourier(&self, k: &Vector3<f64>) -> Matrix3<Complex64> {
        let vol = self.spacing.powi(3);
        let mut acc = Matrix3::<Complex64>::zeros();
        let mut idx = 0;
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                for kk in 0..self.shape[2] {
                    let m = &self.values[idx];
                    idx += 1;
                    let y = self.voxel_center(i, j, kk);
                    let phase = Complex64::from_polar(vol, -k.dot(&y));
                    for r in 0..3 {
                        for c in 0..3 {
                            acc[(r, c)] += phase * m[(r, c)];
                        }
                    }
                }
            }
        }
        acc
    }
}

/// Scalar dispersive phantom: voxel grid × time bins, `values[bin][voxel]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinnedScalarGrid {
    pub grid: ScalarGrid,
    pub bins: TimeBins,
    /// Per-bin voxel values; `grid.values` is ignored for this variant.
    pub bin_values: Vec<Vec<f64>>,
}

/// Matrix dispersive phantom: voxel grid × time bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinnedMatrixGrid {
    pub grid: MatrixGrid,
    pub bins: TimeBins,
    pub bin_values: Vec<Vec<Matrix3<f64>>>,
}

/// Layered phantom: `χ(t, x) = δ(x₁)δ(x₂) χ(t, x₃)` piecewise constant in
/// `x₃` between boundaries `L₁ > L₂ > … > L_{N+1} = 0`, with per-layer
/// time-bin profiles supported in `[0, T]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayeredSusceptibility {
    /// Boundaries `L₁ > … > L_{N+1} = 0`, length `N + 1`.
    pub boundaries: Vec<f64>,
    pub bins: TimeBins,
    /// `profiles[n][m]` is `χ_{n+1}` in time bin `m`; length `N`.
    pub profiles: Vec<Vec<f64>>,
}

impl LayeredSusceptibility {
    pub fn validate(&self, c: f64) -> Result<()> {
        if self.boundaries.len() < 2 || self.boundaries.len() != self.profiles.len() + 1 {
            return Err(Error::InvalidArgument(
                "layered phantom needs N layers and N + 1 boundaries".into(),
            ));
        }
        if self.boundaries.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument("layer boundaries must be strictly decreasing".into()));
        }
        if *self.boundaries.last().unwrap() != 0.0 {
            return Err(Error::InvalidArgument("deepest boundary must be 0".into()));
        }
        let min_thickness = self
            .boundaries
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        if self.bins.t_max >= 2.0 / c * min_thickness {
            return Err(Error::InvalidArgument(format!(
                "time support T = {} must be below (2/c) * min layer thickness = {}",
                self.bins.t_max,
                2.0 / c * min_thickness
            )));
        }
        Ok(())
    }

    /// Layer index (0-based) containing depth `x3`, or `None` outside `[0, L₁]`.
    pub fn layer_at(&self, x3: f64) -> Option<usize> {
        if x3 < 0.0 || x3 > self.boundaries[0] {
            return None;
        }
        // layer n occupies [L_{n+1}, L_n)
        for n in 0..self.profiles.len() {
            if x3 >= self.boundaries[n + 1] && x3 <= self.boundaries[n] {
                return Some(n);
            }
        }
        None
    }
}

/// Susceptibility phantom in one of the representations covered by the
/// reconstruction regimes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Phantom {
    /// Non-dispersive scalar field given analytically as Gaussian blobs.
    GaussianBlobs(BlobSet),
    /// Non-dispersive scalar field on a voxel grid.
    ScalarVoxels(ScalarGrid),
    /// Dispersive scalar field, time-binned.
    DispersiveScalar(BinnedScalarGrid),
    /// Layered medium along `x₃`.
    Layered(LayeredSusceptibility),
    /// Non-dispersive anisotropic 3×3 matrix field.
    AnisotropicVoxels(MatrixGrid),
    /// Dispersive anisotropic field, time-binned.
    DispersiveAnisotropic(BinnedMatrixGrid),
}

impl Phantom {
    /// Upper bound of the phantom support in `x₃`.
    pub fn support_max_x3(&self) -> f64 {
        fn grid_top(origin: &Vector3<f64>, spacing: f64, shape: &[usize; 3]) -> f64 {
            origin[2] + shape[2] as f64 * spacing
        }
        match self {
            Phantom::GaussianBlobs(set) => set
                .blobs
                .iter()
                .map(|b| b.center[2] + BLOB_SUPPORT_WIDTHS * b.width)
                .fold(f64::NEG_INFINITY, f64::max),
            Phantom::ScalarVoxels(g) => grid_top(&g.origin, g.spacing, &g.shape),
            Phantom::DispersiveScalar(g) => grid_top(&g.grid.origin, g.grid.spacing, &g.grid.shape),
            Phantom::Layered(l) => l.boundaries[0],
            Phantom::AnisotropicVoxels(g) => grid_top(&g.origin, g.spacing, &g.shape),
            Phantom::DispersiveAnisotropic(g) => grid_top(&g.grid.origin, g.grid.spacing, &g.grid.shape),
        }
    }

    /// Axis-aligned bounding box of the support, as `(low, high)` corners.
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        fn grid_box(origin: &Vector3<f64>, spacing: f64, shape: &[usize; 3]) -> (Vector3<f64>, Vector3<f64>) {
            let hi = origin
                + Vector3::new(
                    shape[0] as f64 * spacing,
                    shape[1] as f64 * spacing,
                    shape[2] as f64 * spacing,
                );
            (*origin, hi)
        }
        match self {
            Phantom::GaussianBlobs(set) => {
                let mut lo = Vector3::repeat(f64::INFINITY);
                let mut hi = Vector3::repeat(f64::NEG_INFINITY);
                for b in &set.blobs {
                    let r = BLOB_SUPPORT_WIDTHS * b.width;
                    for a in 0..3 {
                        lo[a] = lo[a].min(b.center[a] - r);
                        hi[a] = hi[a].max(b.center[a] + r);
                    }
                }
                (lo, hi)
            }
            Phantom::ScalarVoxels(g) => grid_box(&g.origin, g.spacing, &g.shape),
            Phantom::DispersiveScalar(g) => grid_box(&g.grid.origin, g.grid.spacing, &g.grid.shape),
            Phantom::Layered(l) => (
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(0.0, 0.0, l.boundaries[0]),
            ),
            Phantom::AnisotropicVoxels(g) => grid_box(&g.origin, g.spacing, &g.shape),
            Phantom::DispersiveAnisotropic(g) => grid_box(&g.grid.origin, g.grid.spacing, &g.grid.shape),
        }
    }

    /// Combined spatio-temporal transform `χ̃(ω, k)` for scalar phantoms.
    ///
    /// Non-dispersive phantoms are delta-like in time (`χ̂` frequency
    /// independent), so their `χ̃(ω, k)` reduces to the spatial transform.
    pub fn chi_tilde_scalar(&self, omega: f64, k: &Vector3<f64>) -> Result<Complex64> {
        match self {
            Phantom::GaussianBlobs(set) => Ok(set.spatial_fourier(k)),
            Phantom::ScalarVoxels(g) => Ok(g.spatial_fourier(k)),
            Phantom::DispersiveScalar(b) => {
                let vol = b.grid.spacing.powi(3);
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, voxels) in b.bin_values.iter().enumerate() {
                    let tfac = b.bins.bin_spectrum(m, omega);
                    let mut spatial = Complex64::new(0.0, 0.0);
                    let mut idx = 0;
                    for i in 0..b.grid.shape[0] {
                        for j in 0..b.grid.shape[1] {
                            for kk in 0..b.grid.shape[2] {
                                let v = voxels[idx];
                                idx += 1;
                                if v != 0.0 {
                                    let y = b.grid.voxel_center(i, j, kk);
                                    spatial += Complex64::from_polar(v, -k.dot(&y));
                                }
                            }
                        }
                    }
                    acc += tfac * spatial * vol;
                }
                Ok(acc)
            }
            _ => Err(Error::DataMismatch("chi_tilde_scalar needs a scalar phantom".into())),
        }
    }
}

/// Build an analytic Gaussian-blob phantom.
pub fn make_gaussian_phantom(
    centers: &[Vector3<f64>],
    widths: &[f64],
    amplitudes: &[f64],
) -> Result<Phantom> {
    if centers.len() != widths.len() || centers.len() != amplitudes.len() {
        return Err(Error::InvalidArgument("centers, widths and amplitudes must have equal length".into()));
    }
    for &w in widths {
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!("blob width must be positive, got {w}")));
        }
    }
    let blobs = centers
        .iter()
        .zip(widths)
        .zip(amplitudes)
        .map(|((c, &w), &a)| GaussianBlob { center: *c, width: w, amplitude: a })
        .collect();
    Ok(Phantom::GaussianBlobs(BlobSet { blobs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn test_geometry() -> Geometry {
        let mirrors = Geometry::uniform_mirrors(20.0, 0.125, 64);
        Geometry::new(
            60.0,
            20.0,
            8.0,
            mirrors,
            Geometry::direction_grid(3, 0.3),
            Vector3::new(1.0, 0.0, 0.0),
        )
        .unwrap()
    }

    /// Midpoint-rule quadrature of the continuum Fourier integral; the
    /// independent oracle for closed-form blob transforms.
    fn quadrature_fourier(set: &BlobSet, k: &Vector3<f64>, n: usize, half: f64) -> Complex64 {
        let h = 2.0 * half / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let x = Vector3::new(
                        -half + (i as f64 + 0.5) * h,
                        -half + (j as f64 + 0.5) * h,
                        -half + (l as f64 + 0.5) * h,
                    );
                    let v = set.eval(&x);
                    if v != 0.0 {
                        acc += Complex64::from_polar(v, -k.dot(&x));
                    }
                }
            }
        }
        acc * h.powi(3)
    }

    #[test]
    fn zero_amplitude_blob_has_zero_transform() {
        let p = make_gaussian_phantom(&[Vector3::new(0.3, -0.2, 1.0)], &[0.5], &[0.0]).unwrap();
        let v = p.chi_tilde_scalar(1.0, &Vector3::new(0.4, 0.1, -0.7)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unit_blob_dc_value() {
        // chi_tilde(0) = (2 pi)^{3/2} for w = a = 1, against the quadrature oracle.
        let p = make_gaussian_phantom(&[Vector3::zeros()], &[1.0], &[1.0]).unwrap();
        let got = p.chi_tilde_scalar(0.7, &Vector3::zeros()).unwrap();
        let expect = (2.0 * std::f64::consts::PI).powf(1.5);
        assert!((got.re - expect).abs() < 1e-12 * expect);
        assert!(got.im.abs() < 1e-14);

        let set = match &p {
            Phantom::GaussianBlobs(s) => s.clone(),
            _ => unreachable!(),
        };
        let oracle = quadrature_fourier(&set, &Vector3::zeros(), 96, 8.0);
        assert!((oracle.re - expect).abs() < 1e-4 * expect);
    }

    #[test]
    fn blob_pair_phase_structure_matches_quadrature() {
        let c0 = Vector3::new(0.4, -0.3, 0.6);
        let p = make_gaussian_phantom(&[c0, -c0], &[0.7, 0.7], &[1.3, 1.3]).unwrap();
        let set = match &p {
            Phantom::GaussianBlobs(s) => s.clone(),
            _ => unreachable!(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let k = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let closed = set.spatial_fourier(&k);
            // symmetric real pair: transform is real, 2 a F(k) cos(<k,c0>)
            assert!(closed.im.abs() <= 1e-12 * closed.norm().max(1e-30));
            let oracle = quadrature_fourier(&set, &k, 72, 8.0);
            assert!((closed - oracle).norm() <= 1e-3 * oracle.norm().max(1e-9));
        }
    }

    #[test]
    fn quadrature_matches_analytic_on_voxelized_blob() {
        // 64^3 grid, blob resolved by >= 6 voxels per width: rel error <= 1e-3.
        let set = BlobSet {
            blobs: vec![GaussianBlob { center: Vector3::new(0.1, -0.2, 0.05), width: 0.8, amplitude: 2.0 }],
        };
        let n = 64;
        let half = 4.2; // spacing = 0.131 -> 6.1 voxels per width
        let grid = set.rasterize(Vector3::new(-half, -half, -half), 2.0 * half / n as f64, [n, n, n]);
        for k in [Vector3::new(0.5, 0.0, 0.8), Vector3::new(-1.0, 0.6, 0.3), Vector3::zeros()] {
            let got = grid.spatial_fourier(&k);
            let want = set.spatial_fourier(&k);
            assert!(
                (got - want).norm() <= 1e-3 * want.norm(),
                "k = {k:?}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn negative_width_rejected() {
        assert!(make_gaussian_phantom(&[Vector3::zeros()], &[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn pulse_support_and_symmetry() {
        let geo = test_geometry();
        let pulse = make_pulse(PulseKind::GaussianWindowedCosine, 2.0 * std::f64::consts::PI, 1.5, &geo, Units::default())
            .unwrap();
        let peak = pulse.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // vanishes outside the declared window
        let (lo, hi) = pulse.support();
        assert!(pulse.sample(lo - 0.5).abs() <= SUPPORT_TOL * peak);
        assert!(pulse.sample(hi + 0.5).abs() <= SUPPORT_TOL * peak);
        // realness symmetry at a handful of frequencies
        for w in [0.3, 1.7, 6.9] {
            let a = pulse.spectrum(w);
            let b = pulse.spectrum(-w);
            assert!((a.conj() - b).norm() <= 1e-12 * a.norm().max(1e-30));
        }
    }

    #[test]
    fn pulse_spectrum_peaks_at_carrier() {
        let geo = test_geometry();
        let w0 = 2.0 * std::f64::consts::PI;
        let pulse = make_pulse(PulseKind::GaussianWindowedCosine, w0, 1.5, &geo, Units::default()).unwrap();
        let grid = FrequencyGrid::for_geometry(&geo, Units::default()).unwrap();
        let (best, _) = grid
            .omegas()
            .iter()
            .enumerate()
            .map(|(i, &w)| (i, pulse.spectrum(w).norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let w_best = grid.omega(best);
        assert!((w_best.abs() - w0).abs() <= grid.delta_omega());
    }

    #[test]
    fn pulse_too_long_for_window_rejected() {
        let geo = test_geometry();
        // tiny bandwidth -> envelope longer than the window
        let err = make_pulse(PulseKind::GaussianWindowedCosine, 6.0, 0.05, &geo, Units::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn geometry_rejects_bad_configs() {
        let mirrors = Geometry::uniform_mirrors(20.0, 0.125, 8);
        let dirs = Geometry::direction_grid(1, 0.0);
        // R outside (delta, d - 2 delta)
        assert!(Geometry::new(30.0, 20.0, 8.0, mirrors.clone(), dirs.clone(), Vector3::new(1.0, 0.0, 0.0)).is_err());
        // nonzero p3
        assert!(Geometry::new(60.0, 20.0, 8.0, mirrors.clone(), dirs.clone(), Vector3::new(0.0, 0.0, 1.0)).is_err());
        // mirror at R
        let mut bad = mirrors.clone();
        *bad.last_mut().unwrap() = 20.0;
        assert!(Geometry::new(60.0, 20.0, 8.0, bad, dirs.clone(), Vector3::new(1.0, 0.0, 0.0)).is_err());
        // phantom too high
        let geo = Geometry::new(60.0, 20.0, 8.0, mirrors, dirs, Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let tall = make_gaussian_phantom(&[Vector3::new(0.0, 0.0, 13.0)], &[0.5], &[1.0]).unwrap();
        assert!(geo.check_phantom(&tall).is_err());
        let ok = make_gaussian_phantom(&[Vector3::new(0.0, 0.0, 2.0)], &[0.5], &[1.0]).unwrap();
        assert!(geo.check_phantom(&ok).is_ok());
    }

    #[test]
    fn frequency_grid_symmetric_and_nonzero() {
        let g = FrequencyGrid::from_mirror_grid(0.125, 64, 1.0).unwrap();
        for k in 0..g.len() {
            assert!(g.omega(k) != 0.0);
            assert!((g.omega(k) + g.omega(g.mirror_index(k))).abs() < 1e-12);
        }
    }
}
