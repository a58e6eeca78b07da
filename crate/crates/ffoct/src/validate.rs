//! Built-in self-check suites behind the `validate` subcommand.
//!
//! Each suite exercises one load-bearing identity of the crate against an
//! independent oracle and reports the measured figure next to its tolerance.
//! A mutation hook lets tests confirm that a deliberately broken identity is
//! caught and attributed to the right suite.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::Serialize;

use crate::error::Result;
use crate::forward::{
    dyadic_green_farfield, dyadic_green_field, scattered_spectrum, synthesize_measurements,
    VectorField,
};
use crate::inversion::{
    anisotropic_b, anisotropic_solve, dispersive_recursion, recover_scattered_spectrum,
    rotated_direction, DEFAULT_EPS_F,
};
use crate::inversion::aniso::PolarizationData;
use crate::layered::{fresnel, propagate_incident, transfer_matrix, LayerStack};
use crate::model::{make_gaussian_phantom, make_pulse, Geometry, PulseKind, Units};
use crate::radon::trace_from_profile;
use num_complex::Complex64;

/// Deliberate defects injectable for testing the validator itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Flip the sign of the Fresnel reflection coefficient.
    FresnelSignFlip,
}

/// Outcome of one suite: the measured figure, its tolerance and a verdict.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteResult {
    fn leq(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        SuiteResult {
            name: name.into(),
            passed: measured.is_finite() && measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }
}

/// Full validation report.
#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub suites: Vec<SuiteResult>,
}

impl ValidateReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

// Deterministic pseudo-random doubles in [-1, 1) for check data (splitmix64;
// the library proper carries no RNG dependency).
struct Mix(u64);

impl Mix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }
}

fn far_field_suite() -> SuiteResult {
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
    let phi =
        VectorField { origin: Vector3::repeat(-1.5 * spacing), spacing, shape: [n, n, n], values };
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
    SuiteResult::leq(
        "far-field-convergence",
        (slope + 1.0).abs(),
        0.1,
        format!("log-log slope of the far-field error over rho in {{50,100,200,400}}: {slope:.4}"),
    )
}

fn round_trip_suite() -> Result<SuiteResult> {
    let u = Units::default();
    let mirrors = Geometry::uniform_mirrors(16.0, 1.0, 32);
    let geo = Geometry::new(
        400.0,
        16.0,
        4.0,
        mirrors,
        Geometry::direction_grid(3, 0.25),
        Vector3::new(1.0, 0.0, 0.0),
    )?;
    let pulse = make_pulse(PulseKind::GaussianWindowedCosine, 4.0, 2.0, &geo, u)?;
    let phantom = make_gaussian_phantom(
        &[Vector3::new(0.4, -0.3, 3.0), Vector3::new(-0.5, 0.2, 5.0)],
        &[0.6, 0.5],
        &[1.0, -0.7],
    )?;
    let truth = scattered_spectrum(&phantom, &pulse, &geo, u)?;
    let m = synthesize_measurements(&phantom, &pulse, &geo, u)?;
    let rec = recover_scattered_spectrum(&m, DEFAULT_EPS_F)?;
    let peak = truth.values.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
    let mut worst = 0.0f64;
    for k in 0..truth.grid.len() {
        if !rec.mask[k] {
            continue;
        }
        for d in 0..truth.directions.len() {
            for j in 0..2 {
                if !rec.components[j] {
                    continue;
                }
                let got = rec.spectrum.value(k, d)[j];
                let want = truth.value(k, d)[j];
                worst = worst.max((got - want).norm() / peak);
            }
        }
    }
    Ok(SuiteResult::leq(
        "measurement-round-trip",
        worst,
        1e-8,
        "largest relative error of the recovered scattered spectrum on the usable band".into(),
    ))
}

fn fresnel_suite(mutation: Mutation) -> Result<SuiteResult> {
    let mutate = |rho: f64| if mutation == Mutation::FresnelSignFlip { -rho } else { rho };
    let mut worst = 0.0f64;
    let pairs = [(0.0, 0.4), (0.4, 0.9), (0.9, 0.1), (-0.3, 0.7), (0.25, -0.5)];
    for &(a, b) in &pairs {
        let (rho, tau) = fresnel(a, b)?;
        let rho = mutate(rho);
        let (rho_rev, _) = fresnel(b, a)?;
        let rho_rev = mutate(rho_rev);
        // antisymmetry under interface reversal
        worst = worst.max((rho + rho_rev).abs());
        // transmission pairing
        worst = worst.max((tau - (1.0 + rho)).abs());
        // energy identity n1 (1 - rho^2) = n2 tau^2
        let (n1, n2) = ((a + 1.0).sqrt(), (b + 1.0).sqrt());
        worst = worst.max((n1 * (1.0 - rho * rho) - n2 * tau * tau).abs());
        // transfer-matrix determinant identity (1 - rho) / (1 + rho)
        let m = transfer_matrix(b, 2.0, 0.5, 3.7, rho, tau, Units::default())?;
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        worst = worst.max((det - Complex64::new((1.0 - rho) / (1.0 + rho), 0.0)).norm());
    }
    // incident-field propagation round trip through a three-layer stack
    let stack = LayerStack::new(vec![6.0, 4.0, 1.5, 0.0], vec![0.3, 0.8, 0.5])?;
    let u = Units::default();
    let omega = 2.9;
    let (e0, e1r) = (Complex64::new(1.0, 0.2), Complex64::new(-0.3, 0.4));
    let (en0, enr) = propagate_incident(&stack, 3, e0, e1r, omega, u)?;
    let mut prod = Matrix2::identity();
    for j in 1..3 {
        let chi_prev = if j == 1 { 0.0 } else { stack.chi[j - 2] };
        let (rho, _) = fresnel(chi_prev, stack.chi[j - 1])?;
        let rho = mutate(rho);
        let tau = 1.0 + rho;
        prod *= transfer_matrix(
            stack.chi[j - 1],
            stack.boundaries[j - 1],
            stack.boundaries[j],
            omega,
            rho,
            tau,
            u,
        )?;
    }
    let back = prod * nalgebra::Vector2::new(en0, enr);
    worst = worst.max(((back[0] - e0).norm() + (back[1] - e1r).norm()) / e0.norm());
    Ok(SuiteResult::leq(
        "fresnel-identities",
        worst,
        1e-12,
        "largest residual over antisymmetry, energy, determinant and propagation round-trip checks"
            .into(),
    ))
}

fn dispersive_suite() -> Result<SuiteResult> {
    let u = Units::default();
    let t_support = 1.0;
    let theta = Vector3::new(0.15, -0.1, 1.0).normalize();
    let n_planes = 4i64;
    let mut mix = Mix(0x00c0ffee);
    let coefs: Vec<[f64; 3]> = (0..n_planes).map(|_| [mix.f64(), mix.f64(), mix.f64()]).collect();
    let profile = move |n: i64, tau: f64| -> f64 {
        if n < 0 || n >= n_planes {
            return 0.0;
        }
        let s = (std::f64::consts::PI * tau / t_support).sin();
        let w = 2.0 * std::f64::consts::PI * tau / t_support;
        let c = &coefs[n as usize];
        s * s * s * s * (c[0] + c[1] * w.cos() + c[2] * w.sin())
    };
    let k = 24usize;
    let (n_min, n_max) = (0i64, n_planes - 1);
    let make_trace = |k: usize| -> Result<crate::radon::Trace> {
        let dt = t_support / k as f64;
        let lo = 0.5 * dt - (n_max as f64 + 0.5) * t_support - 4.0 * dt;
        let hi = (k as f64 - 0.5) * dt - (n_min as f64 + 0.5) * t_support + 4.0 * dt;
        let t0 = ((lo / dt - 0.5).floor() + 0.5) * dt;
        let len = ((hi - t0) / dt).ceil() as usize + 1;
        trace_from_profile(&profile, t_support, &theta, t0, dt, len, 96, u)
    };
    let tr = make_trace(k)?;
    let bins = dispersive_recursion(&tr, t_support, n_min, n_max, k, u)?;
    let mut err = 0.0f64;
    for n in n_min..=n_max {
        for (m, &tau) in bins.tau_samples().iter().enumerate() {
            err = err.max((bins.value(n, m) - profile(n, tau)).abs());
        }
    }
    // second-order central-difference error bound from a finer trace
    let fine = make_trace(k * 8)?;
    let mut m3 = 0.0f64;
    let h = fine.dt;
    for i in 2..fine.values.len() - 2 {
        let v = &fine.values;
        let d3 = (v[i + 2] - 2.0 * v[i + 1] + 2.0 * v[i - 1] - v[i - 2]) / (2.0 * h * h * h);
        m3 = m3.max(d3.abs());
    }
    let fac = (2.0 * (1.0 + theta[2])).sqrt() / u.c;
    let bound = n_planes as f64 * fac * tr.dt * tr.dt / 6.0 * m3 * 1.5;
    Ok(SuiteResult::leq(
        "dispersive-recursion",
        err,
        bound,
        "largest bin error against the generating profile, bounded by the finite-difference estimate"
            .into(),
    ))
}

fn aniso_suite() -> Result<SuiteResult> {
    let mut mix = Mix(0x5eed);
    let theta = Vector3::new(0.12, -0.08, 1.0).normalize();
    let rot_x = |a: f64| Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos());
    let rot_y = |a: f64| Matrix3::new(a.cos(), 0.0, a.sin(), 0.0, 1.0, 0.0, -a.sin(), 0.0, a.cos());
    let rotations = [rot_x(0.3), rot_y(0.25), rot_x(-0.2) * rot_y(0.35)];
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x = Matrix3::from_fn(|_, _| mix.f64());
        let mut b = [Matrix2::zeros(); 3];
        for (r, rot) in rotations.iter().enumerate() {
            let rd = rotated_direction(rot, &theta).unwrap();
            let data = PolarizationData::from_matrix(&rd.theta_r, &(rot * x * rot.transpose()));
            b[r] = anisotropic_b(&data);
        }
        let (got, _residual) = anisotropic_solve(&theta, &rotations, &b)?;
        worst = worst.max((got - x).norm() / x.norm());
    }
    Ok(SuiteResult::leq(
        "anisotropic-recovery",
        worst,
        1e-9,
        "largest relative recovery error over 10 deterministic random matrices".into(),
    ))
}

/// Run every built-in suite. `mutation` injects a deliberate defect so tests
/// can confirm that the validator catches and names the broken suite.
pub fn run_suites(mutation: Mutation) -> Result<ValidateReport> {
    Ok(ValidateReport {
        suites: vec![
            far_field_suite(),
            round_trip_suite()?,
            fresnel_suite(mutation)?,
            dispersive_suite()?,
            aniso_suite()?,
        ],
    })
}
