//! Tilted-plane geometry and plane integrals (Radon-type data).
//!
//! The planes are `E_{σ,θ} = {y : <θ+e₃, y> = cσ}` with the time-like offset
//! `σ` and a detector direction `θ ∈ S²₊`. Their graph parametrisation
//!
//! `ψ_{σ,θ}(x₁,x₂) = (x₁, x₂, cσ/(1+θ₃) − (θ₁x₁+θ₂x₂)/(1+θ₃))`
//!
//! has the constant area element `|∂₁ψ × ∂₂ψ| = √(2(1+θ₃))/(1+θ₃)`, so plane
//! integrals reduce to scaled 2D quadrature in `(x₁, x₂)`. The module also
//! produces the measurement traces
//!
//! `m(t,θ) = c/√(2(1+θ₃)) ∫ b̄χ(τ; τ−t, θ) dτ`
//!
//! consumed by the dispersive depth recursion and the layered reconstruction.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{MatrixGrid, Phantom, ScalarGrid, Units};

/// The plane `E_{σ,θ}`; `σ` carries units of time.
#[derive(Debug, Clone)]
pub struct PlaneSpec {
    pub sigma: f64,
    pub theta: Vector3<f64>,
}

impl PlaneSpec {
    pub fn new(sigma: f64, theta: Vector3<f64>) -> Result<Self> {
        if (theta.norm() - 1.0).abs() > 1e-10 || theta[2] <= 0.0 {
            return Err(Error::InvalidArgument(
                "plane direction must be a unit vector with positive third component".into(),
            ));
        }
        Ok(PlaneSpec { sigma, theta })
    }

    /// Graph parametrisation `ψ_{σ,θ}(x₁, x₂)`.
    pub fn point(&self, x1: f64, x2: f64, units: Units) -> Vector3<f64> {
        let t3 = 1.0 + self.theta[2];
        Vector3::new(
            x1,
            x2,
            units.c * self.sigma / t3 - (self.theta[0] * x1 + self.theta[1] * x2) / t3,
        )
    }

    /// Area element `|∂₁ψ × ∂₂ψ| = √(2(1+θ₃))/(1+θ₃)`.
    pub fn area_factor(&self) -> f64 {
        let t3 = 1.0 + self.theta[2];
        (2.0 * t3).sqrt() / t3
    }

    /// Unit normal `(θ+e₃)/|θ+e₃|`.
    pub fn unit_normal(&self) -> Vector3<f64> {
        let n = self.theta + Vector3::new(0.0, 0.0, 1.0);
        n / n.norm()
    }

    /// Signed distance of `y` from the plane.
    pub fn signed_distance(&self, y: &Vector3<f64>, units: Units) -> f64 {
        let n = self.theta + Vector3::new(0.0, 0.0, 1.0);
        (n.dot(y) - units.c * self.sigma) / n.norm()
    }
}

/// True if the plane does not intersect the closed box `[lo, hi]`.
fn plane_misses_box(plane: &PlaneSpec, lo: &Vector3<f64>, hi: &Vector3<f64>, units: Units) -> bool {
    let mut neg = false;
    let mut pos = false;
    for ix in 0..2 {
        for iy in 0..2 {
            for iz in 0..2 {
                let corner = Vector3::new(
                    if ix == 0 { lo[0] } else { hi[0] },
                    if iy == 0 { lo[1] } else { hi[1] },
                    if iz == 0 { lo[2] } else { hi[2] },
                );
                let s = plane.signed_distance(&corner, units);
                neg |= s < 0.0;
                pos |= s > 0.0;
                if s == 0.0 {
                    return false;
                }
            }
        }
    }
    !(neg && pos)
}

/// Midpoint quadrature of a field over the plane: the lattice covers the
/// given `(x₁, x₂)` footprint with steps no larger than `step`.
pub fn plane_integral_field<F: Fn(&Vector3<f64>) -> f64>(
    f: F,
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    step: f64,
    plane: &PlaneSpec,
    units: Units,
) -> f64 {
    let (a1, b1) = x1_range;
    let (a2, b2) = x2_range;
    if !(b1 > a1 && b2 > a2 && step > 0.0) {
        return 0.0;
    }
    let n1 = ((b1 - a1) / step).ceil() as usize;
    let n2 = ((b2 - a2) / step).ceil() as usize;
    let h1 = (b1 - a1) / n1 as f64;
    let h2 = (b2 - a2) / n2 as f64;
    let mut acc = 0.0;
    for i in 0..n1 {
        let x1 = a1 + (i as f64 + 0.5) * h1;
        let mut row = 0.0;
        for j in 0..n2 {
            let x2 = a2 + (j as f64 + 0.5) * h2;
            row += f(&plane.point(x1, x2, units));
        }
        acc += row;
    }
    acc * h1 * h2 * plane.area_factor()
}

fn grid_footprint(origin: &Vector3<f64>, spacing: f64, shape: &[usize; 3]) -> ((f64, f64), (f64, f64)) {
    (
        (origin[0] - spacing, origin[0] + (shape[0] as f64 + 1.0) * spacing),
        (origin[1] - spacing, origin[1] + (shape[1] as f64 + 1.0) * spacing),
    )
}

fn grid_box(origin: &Vector3<f64>, spacing: f64, shape: &[usize; 3]) -> (Vector3<f64>, Vector3<f64>) {
    (
        *origin,
        origin + Vector3::new(
            shape[0] as f64 * spacing,
            shape[1] as f64 * spacing,
            shape[2] as f64 * spacing,
        ),
    )
}

fn voxel_lookup<'a, T>(
    origin: &Vector3<f64>,
    spacing: f64,
    shape: &[usize; 3],
    values: &'a [T],
    y: &Vector3<f64>,
) -> Option<&'a T> {
    let mut idx = [0usize; 3];
    for a in 0..3 {
        let s = (y[a] - origin[a]) / spacing;
        if s < 0.0 || s >= shape[a] as f64 {
            return None;
        }
        idx[a] = s as usize;
    }
    Some(&values[(idx[0] * shape[1] + idx[1]) * shape[2] + idx[2]])
}

/// Plane integral of a piecewise-constant voxel field (nearest-voxel lookup,
/// quadrature step equal to the voxel spacing). Exact zero off the support.
pub fn plane_integral_grid(grid: &ScalarGrid, plane: &PlaneSpec, units: Units) -> f64 {
    let (lo, hi) = grid_box(&grid.origin, grid.spacing, &grid.shape);
    if plane_misses_box(plane, &lo, &hi, units) {
        return 0.0;
    }
    let (r1, r2) = grid_footprint(&grid.origin, grid.spacing, &grid.shape);
    plane_integral_field(
        |y| voxel_lookup(&grid.origin, grid.spacing, &grid.shape, &grid.values, y).copied().unwrap_or(0.0),
        r1,
        r2,
        grid.spacing,
        plane,
        units,
    )
}

/// Component-wise plane integral of a matrix voxel field.
pub fn plane_integral_matrix(grid: &MatrixGrid, plane: &PlaneSpec, units: Units) -> Matrix3<f64> {
    let (lo, hi) = grid_box(&grid.origin, grid.spacing, &grid.shape);
    if plane_misses_box(plane, &lo, &hi, units) {
        return Matrix3::zeros();
    }
    let (r1, r2) = grid_footprint(&grid.origin, grid.spacing, &grid.shape);
    let mut out = Matrix3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            out[(r, c)] = plane_integral_field(
                |y| {
                    voxel_lookup(&grid.origin, grid.spacing, &grid.shape, &grid.values, y)
                        .map(|m| m[(r, c)])
                        .unwrap_or(0.0)
                },
                r1,
                r2,
                grid.spacing,
                plane,
                units,
            );
        }
    }
    out
}

/// Closed-form plane integrals of an analytic blob set.
pub fn plane_integral_blobs(set: &crate::model::BlobSet, plane: &PlaneSpec, units: Units) -> f64 {
    set.blobs
        .iter()
        .map(|b| b.plane_integral(plane.signed_distance(&b.center, units)))
        .sum()
}

/// Time-resolved Radon value `b̄χ(τ; σ, θ)` of a dispersive scalar phantom.
pub fn radon_scalar(phantom: &Phantom, tau: f64, plane: &PlaneSpec, units: Units) -> Result<f64> {
    match phantom {
        Phantom::DispersiveScalar(b) => {
            if tau < 0.0 || tau >= b.bins.t_max {
                return Ok(0.0);
            }
            let bin = ((tau / b.bins.width()) as usize).min(b.bins.count - 1);
            let view = ScalarGrid {
                origin: b.grid.origin,
                spacing: b.grid.spacing,
                shape: b.grid.shape,
                values: b.bin_values[bin].clone(),
            };
            Ok(plane_integral_grid(&view, plane, units))
        }
        _ => Err(Error::DataMismatch(
            "time-resolved Radon data needs a dispersive scalar phantom".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Radon bins and measurement traces
// ---------------------------------------------------------------------------

/// Plane-discretized Radon data `b̄χ_n(τ_m, θ)`: plane index `n` labels
/// `E_{nT,θ}` and `τ_m` are uniform samples of `(0, T)`.
#[derive(Debug, Clone)]
pub struct RadonBins {
    pub theta: Vector3<f64>,
    /// Time support `T`, equal to the plane spacing in `σ`.
    pub t_support: f64,
    pub n_min: i64,
    /// `values[n - n_min][m]` at `τ_m = (m + 1/2) T / k`.
    pub values: Vec<Vec<f64>>,
}

impl RadonBins {
    pub fn n_max(&self) -> i64 {
        self.n_min + self.values.len() as i64 - 1
    }

    pub fn tau_samples(&self) -> Vec<f64> {
        let k = self.values.first().map(|v| v.len()).unwrap_or(0);
        (0..k).map(|m| (m as f64 + 0.5) * self.t_support / k as f64).collect()
    }

    pub fn value(&self, n: i64, m: usize) -> f64 {
        if n < self.n_min || n > self.n_max() {
            return 0.0;
        }
        self.values[(n - self.n_min) as usize][m]
    }
}

/// A real trace sampled uniformly in time, tagged with its direction.
#[derive(Debug, Clone)]
pub struct Trace {
    pub theta: Vector3<f64>,
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.dt
    }

    /// Second-order derivative samples: central differences inside, one-sided
    /// three-point stencils at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.values.len();
        let v = &self.values;
        let dt = self.dt;
        let mut d = vec![0.0; n];
        if n < 3 {
            return d;
        }
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
        }
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
        d
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even, >= 2) subintervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// The defining forward sum of the plane-discretized model:
///
/// `m̄(t,θ) = c/√(2(1+θ₃)) ∫₀ᵀ profile(N(τ−t), τ) dτ`, `N(σ) = ⌊σ/T + ½⌋`.
///
/// `profile(n, τ)` must be smooth in `τ` on `(0, T)`; the integral is split
/// at the single switch point of `N` inside `(0, T)` and each smooth segment
/// is integrated by composite Simpson with `n_quad` subintervals.
pub fn trace_from_profile<F: Fn(i64, f64) -> f64 + Sync>(
    profile: F,
    t_support: f64,
    theta: &Vector3<f64>,
    t0: f64,
    dt: f64,
    len: usize,
    n_quad: usize,
    units: Units,
) -> Result<Trace> {
    if !(t_support > 0.0) || !(dt > 0.0) || len < 3 {
        return Err(Error::InvalidArgument(
            "trace needs positive T, positive dt and at least 3 samples".into(),
        ));
    }
    let t_big = t_support;
    let fac = units.c / (2.0 * (1.0 + theta[2])).sqrt();
    let values: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let t = t0 + i as f64 * dt;
            // N(tau - t) jumps where tau = t + (k + 1/2) T; it is constant on
            // each open segment, so freeze it at the segment midpoint.
            let k0 = ((0.0 - t) / t_big + 0.5).floor() as i64; // N at tau -> 0+
            let switch = t + (k0 as f64 + 0.5) * t_big;
            let segment = |a: f64, b: f64| {
                let n_idx = (((a + b) / 2.0 - t) / t_big + 0.5).floor() as i64;
                simpson(|tau| profile(n_idx, tau), a, b, n_quad)
            };
            let acc = if switch > 0.0 && switch < t_big {
                segment(0.0, switch) + segment(switch, t_big)
            } else {
                segment(0.0, t_big)
            };
            fac * acc
        })
        .collect();
    Ok(Trace { theta: *theta, t0, dt, values })
}

/// Continuous-plane measurement trace of a smooth time-resolved field
/// `χ(τ, y)` supported in `τ ∈ [0, T]`:
///
/// `m(t,θ) = c/√(2(1+θ₃)) ∫₀ᵀ b̄χ(τ; τ−t, θ) dτ`
///
/// with `n_tau` midpoint samples in `τ` and plane quadrature on the given
/// footprint.
#[allow(clippy::too_many_arguments)]
pub fn trace_from_field<F: Fn(f64, &Vector3<f64>) -> f64 + Sync>(
    chi: F,
    t_support: f64,
    n_tau: usize,
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    step: f64,
    theta: &Vector3<f64>,
    t0: f64,
    dt: f64,
    len: usize,
    units: Units,
) -> Result<Trace> {
    if n_tau == 0 || !(t_support > 0.0) {
        return Err(Error::InvalidArgument("trace needs n_tau > 0 and T > 0".into()));
    }
    let fac = units.c / (2.0 * (1.0 + theta[2])).sqrt();
    let dtau = t_support / n_tau as f64;
    let values: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let t = t0 + i as f64 * dt;
            let mut acc = 0.0;
            for q in 0..n_tau {
                let tau = (q as f64 + 0.5) * dtau;
                let plane = PlaneSpec { sigma: tau - t, theta: *theta };
                acc += plane_integral_field(|y| chi(tau, y), x1_range, x2_range, step, &plane, units);
            }
            fac * acc * dtau
        })
        .collect();
    Ok(Trace { theta: *theta, t0, dt, values })
}

/// [`trace_from_field`] specialised to a scalar phantom with time support
/// `[0, t_support]`. Dispersive voxel phantoms take `n_sub` midpoint samples
/// per time bin (their bin span must equal `t_support`); Gaussian-blob
/// phantoms are time-uniform on the support and use `n_sub` midpoint samples
/// with exact plane integrals.
#[allow(clippy::too_many_arguments)]
pub fn trace_from_phantom(
    phantom: &Phantom,
    t_support: f64,
    theta: &Vector3<f64>,
    t0: f64,
    dt: f64,
    len: usize,
    n_sub: usize,
    units: Units,
) -> Result<Trace> {
    if !(t_support > 0.0) {
        return Err(Error::InvalidArgument("trace needs T > 0".into()));
    }
    let fac = units.c / (2.0 * (1.0 + theta[2])).sqrt();
    match phantom {
        Phantom::DispersiveScalar(b) => {
            if (b.bins.t_max - t_support).abs() > 1e-12 * b.bins.t_max {
                return Err(Error::DataMismatch(format!(
                    "phantom bin span {} does not match the requested support {t_support}",
                    b.bins.t_max
                )));
            }
            let n_tau = b.bins.count * n_sub.max(1);
            let dtau = b.bins.t_max / n_tau as f64;
            let values: Vec<f64> = (0..len)
                .into_par_iter()
                .map(|i| {
                    let t = t0 + i as f64 * dt;
                    let mut acc = 0.0;
                    for q in 0..n_tau {
                        let tau = (q as f64 + 0.5) * dtau;
                        let plane = PlaneSpec { sigma: tau - t, theta: *theta };
                        acc += radon_scalar(phantom, tau, &plane, units).unwrap_or(0.0);
                    }
                    fac * acc * dtau
                })
                .collect();
            Ok(Trace { theta: *theta, t0, dt, values })
        }
        Phantom::GaussianBlobs(set) => {
            let n_tau = n_sub.max(1);
            let dtau = t_support / n_tau as f64;
            let values: Vec<f64> = (0..len)
                .into_par_iter()
                .map(|i| {
                    let t = t0 + i as f64 * dt;
                    let mut acc = 0.0;
                    for q in 0..n_tau {
                        let tau = (q as f64 + 0.5) * dtau;
                        let plane = PlaneSpec { sigma: tau - t, theta: *theta };
                        acc += plane_integral_blobs(set, &plane, units);
                    }
                    fac * acc * dtau
                })
                .collect();
            Ok(Trace { theta: *theta, t0, dt, values })
        }
        _ => Err(Error::DataMismatch(
            "trace_from_phantom needs a dispersive scalar or Gaussian-blob phantom".into(),
        )),
    }
}
