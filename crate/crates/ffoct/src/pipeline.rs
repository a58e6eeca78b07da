//! End-to-end pipelines behind the command-line interface: build a phantom
//! dataset, synthesize measurements or traces from it, and run the
//! reconstruction modes. All datasets carry provenance (tool version,
//! config hash, the full run configuration, masks and thresholds used).

use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde_json::json;

use crate::config::{PhantomConfig, ReconstructMode, RunConfig};
use crate::dataset::{write_csv, DatasetReader, DatasetWriter, Manifest};
use crate::error::{Error, Result};
use crate::inversion::{
    anisotropic_solve, axial_inversion, cone_inversion, dispersive_recursion,
    extract_chi_tilde_isotropic, recover_scattered_spectrum, BandWindow, KGrid, DEFAULT_EPS_F,
};
use crate::layered::{layered_forward_trace, layered_reconstruct, LayeredOptions};
use crate::radon::Trace;

fn provenance(cfg: &RunConfig) -> serde_json::Value {
    json!({ "config": cfg })
}

/// Write the phantom described by the config as a dataset.
pub fn run_phantom(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Manifest> {
    let phantom_cfg = cfg
        .phantom
        .as_ref()
        .ok_or_else(|| Error::Config("phantom: missing phantom section".into()))?;
    let mut w = DatasetWriter::new(out, "phantom", hash, provenance(cfg))?;
    match phantom_cfg {
        PhantomConfig::GaussianBlobs { centers, widths, amplitudes } => {
            cfg.phantom()?; // validates
            let flat: Vec<f64> = centers.iter().flatten().copied().collect();
            w.add_f64("centers", &[centers.len(), 3], &flat)?;
            w.add_f64("widths", &[widths.len()], widths)?;
            w.add_f64("amplitudes", &[amplitudes.len()], amplitudes)?;
        }
        PhantomConfig::Layered { .. } => {
            let (stack, t_support) = cfg.layer_stack()?; // enforces T constraint
            w.add_f64("boundaries", &[stack.boundaries.len()], &stack.boundaries)?;
            w.add_f64("chi", &[stack.chi.len()], &stack.chi)?;
            w.add_f64("t_support", &[1], &[t_support])?;
        }
        PhantomConfig::DispersiveScalar { t_support, n_min, profiles, theta } => {
            cfg.phantom()?; // validates
            let k = profiles[0].len();
            let flat: Vec<f64> = profiles.iter().flatten().copied().collect();
            w.add_f64("profiles", &[profiles.len(), k], &flat)?;
            w.add_f64("theta", &[3], theta)?;
            w.add_f64("t_support", &[1], &[*t_support])?;
            w.add_f64("n_min", &[1], &[*n_min as f64])?;
        }
        PhantomConfig::AnisotropicConstant { matrix, theta, rotations } => {
            cfg.aniso_data()?; // validates
            let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
            w.add_f64("matrix", &[3, 3], &flat)?;
            w.add_f64("theta", &[3], theta)?;
            let rflat: Vec<f64> = rotations.iter().flat_map(|r| r.iter().flatten().copied()).collect();
            w.add_f64("rotations", &[rotations.len(), 3, 3], &rflat)?;
        }
    }
    w.finish()
}

/// Synthesize the measurable data of the configured phantom: a full
/// measurement set for blob phantoms, an axial trace for dispersive and
/// layered phantoms, and per-rotation polarization blocks for anisotropic
/// constants.
pub fn run_simulate(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Manifest> {
    let units = cfg.units();
    match cfg
        .phantom
        .as_ref()
        .ok_or_else(|| Error::Config("simulate: missing phantom section".into()))?
    {
        PhantomConfig::GaussianBlobs { .. } => {
            let phantom = cfg.phantom()?;
            let geometry = cfg.geometry()?;
            let pulse = cfg.pulse(&geometry)?;
            let m = crate::forward::synthesize_measurements(&phantom, &pulse, &geometry, units)?;
            let mut prov = provenance(cfg);
            prov["imag_residual"] = json!(m.imag_residual);
            let mut w = DatasetWriter::new(out, "measurements", hash, prov)?;
            w.add_f64("values", &[m.n_mirrors(), m.n_detectors(), 2], &m.values)?;
            w.add_f64("mirrors", &[m.n_mirrors()], &geometry.mirror_positions)?;
            let dirs: Vec<f64> = geometry
                .detector_directions
                .iter()
                .flat_map(|d| [d[0], d[1], d[2]])
                .collect();
            w.add_f64("directions", &[m.n_detectors(), 3], &dirs)?;
            w.finish()
        }
        PhantomConfig::DispersiveScalar { t_support, n_min, profiles, theta } => {
            let t = *t_support;
            let n_planes = profiles.len() as i64;
            let n_max = n_min + n_planes - 1;
            let k = profiles[0].len();
            let theta_v = Vector3::from_column_slice(theta);
            if (theta_v.norm() - 1.0).abs() > 1e-9 || theta_v[2] <= 0.0 {
                return Err(Error::Config("phantom.theta must be a unit vector with theta_3 > 0".into()));
            }
            // 8 samples per bin: central differences at bin centres then stay
            // inside one linear segment of the trace, so the recursion is exact
            let dt = t / (8 * k) as f64;
            let lo = -(n_max as f64 + 0.5) * t - 4.0 * dt;
            let hi = (0.5 - *n_min as f64) * t + 4.0 * dt;
            let t0 = ((lo / dt - 0.5).floor() + 0.5) * dt;
            let len = ((hi - t0) / dt).ceil() as usize + 1;
            let nm = *n_min;
            let trace =
                bin_profile_trace(profiles, nm, t, &theta_v, t0, dt, len, units);
            write_trace(cfg, hash, out, &trace, t, Some((nm, n_max)), Some(k))
        }
        PhantomConfig::Layered { .. } => {
            let (stack, t) = cfg.layer_stack()?;
            let trace = layered_forward_trace(&stack, t, t / 16.0, units)?;
            write_trace(cfg, hash, out, &trace, t, None, None)
        }
        PhantomConfig::AnisotropicConstant { .. } => {
            let (matrix, theta, rotations) = cfg.aniso_data()?;
            let mut blocks = Vec::with_capacity(rotations.len() * 4);
            for rot in &rotations {
                let rd = crate::inversion::rotated_direction(rot, &theta).ok_or_else(|| {
                    Error::Geometry("a configured rotation admits no detector direction".into())
                })?;
                let d = crate::inversion::aniso::PolarizationData::from_matrix(
                    &rd.theta_r,
                    &(rot * matrix * rot.transpose()),
                );
                let b = crate::inversion::anisotropic_b(&d);
                blocks.extend_from_slice(&[b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]]);
            }
            let mut w = DatasetWriter::new(out, "aniso-data", hash, provenance(cfg))?;
            w.add_f64("b_blocks", &[rotations.len(), 2, 2], &blocks)?;
            let rflat: Vec<f64> = rotations
                .iter()
                .flat_map(|r| (0..3).flat_map(move |i| (0..3).map(move |j| r[(i, j)])))
                .collect();
            w.add_f64("rotations", &[rotations.len(), 3, 3], &rflat)?;
            w.add_f64("theta", &[3], &[theta[0], theta[1], theta[2]])?;
            w.finish()
        }
    }
}

/// Exact forward trace of per-plane time-bin profiles,
/// `m̄(t) = c/√(2(1+θ₃)) ∫₀ᵀ profile(N(τ−t), τ) dτ` with `N(σ) = ⌊σ/T + ½⌋`:
/// the profiles are constant on each bin, so the integral is a sum of exact
/// bin/segment overlaps and the trace is piecewise linear in `t`.
#[allow(clippy::too_many_arguments)]
fn bin_profile_trace(
    profiles: &[Vec<f64>],
    n_min: i64,
    t_support: f64,
    theta: &Vector3<f64>,
    t0: f64,
    dt: f64,
    len: usize,
    units: crate::model::Units,
) -> Trace {
    let k = profiles[0].len();
    let w = t_support / k as f64;
    let n_max = n_min + profiles.len() as i64 - 1;
    let fac = units.c / (2.0 * (1.0 + theta[2])).sqrt();
    let segment = |n: i64, a: f64, b: f64| -> f64 {
        if n < n_min || n > n_max || b <= a {
            return 0.0;
        }
        let row = &profiles[(n - n_min) as usize];
        (0..k)
            .map(|m| {
                let overlap =
                    (b.min((m + 1) as f64 * w) - a.max(m as f64 * w)).max(0.0);
                row[m] * overlap
            })
            .sum()
    };
    let values: Vec<f64> = (0..len)
        .map(|i| {
            let t = t0 + i as f64 * dt;
            // N(tau - t) switches once inside (0, T), at tau = t + (k0 + 1/2) T
            let k0 = ((0.0 - t) / t_support + 0.5).floor() as i64;
            let switch = t + (k0 as f64 + 0.5) * t_support;
            let acc = if switch > 0.0 && switch < t_support {
                segment(k0, 0.0, switch) + segment(k0 + 1, switch, t_support)
            } else {
                segment(k0, 0.0, t_support)
            };
            fac * acc
        })
        .collect();
    Trace { theta: *theta, t0, dt, values }
}

fn write_trace(
    cfg: &RunConfig,
    hash: &str,
    out: &Path,
    trace: &Trace,
    t_support: f64,
    plane_window: Option<(i64, i64)>,
    k_bins: Option<usize>,
) -> Result<Manifest> {
    let mut prov = provenance(cfg);
    prov["trace"] = json!({
        "t0": trace.t0,
        "dt": trace.dt,
        "theta": [trace.theta[0], trace.theta[1], trace.theta[2]],
        "t_support": t_support,
        "plane_window": plane_window,
        "k_bins": k_bins,
    });
    let mut w = DatasetWriter::new(out, "trace", hash, prov)?;
    w.add_f64("values", &[trace.values.len()], &trace.values)?;
    w.finish()
}

struct TraceMeta {
    t_support: f64,
    plane_window: Option<(i64, i64)>,
    k_bins: Option<usize>,
}

fn read_trace(reader: &DatasetReader) -> Result<(Trace, TraceMeta)> {
    let meta = &reader.manifest.provenance["trace"];
    let t0 = meta["t0"].as_f64().ok_or_else(|| Error::DataMismatch("trace dataset lacks t0".into()))?;
    let dt = meta["dt"].as_f64().ok_or_else(|| Error::DataMismatch("trace dataset lacks dt".into()))?;
    let theta: Vec<f64> = meta["theta"]
        .as_array()
        .ok_or_else(|| Error::DataMismatch("trace dataset lacks theta".into()))?
        .iter()
        .filter_map(|v| v.as_f64())
        .collect();
    let t_support = meta["t_support"]
        .as_f64()
        .ok_or_else(|| Error::DataMismatch("trace dataset lacks t_support".into()))?;
    let plane_window = meta["plane_window"].as_array().and_then(|a| {
        Some((a.first()?.as_i64()?, a.get(1)?.as_i64()?))
    });
    let k_bins = meta["k_bins"].as_u64().map(|k| k as usize);
    let (_, values) = reader.read_f64("values")?;
    Ok((
        Trace { theta: Vector3::new(theta[0], theta[1], theta[2]), t0, dt, values },
        TraceMeta { t_support, plane_window, k_bins },
    ))
}

fn expect_kind(reader: &DatasetReader, want: &str, mode: &str) -> Result<()> {
    if reader.manifest.kind != want {
        return Err(Error::DataMismatch(format!(
            "{mode} mode needs a {want} dataset, got {}",
            reader.manifest.kind
        )));
    }
    Ok(())
}

/// Run the configured reconstruction mode on an input dataset; writes the
/// reconstruction arrays, a residual/coverage report in the provenance and
/// CSV plot exports.
pub fn run_reconstruct(cfg: &RunConfig, hash: &str, input: &Path, out: &Path) -> Result<Manifest> {
    let units = cfg.units();
    let rc = cfg
        .reconstruct
        .as_ref()
        .ok_or_else(|| Error::Config("reconstruct: missing reconstruct section".into()))?;
    let eps_f = rc.eps_f.unwrap_or(DEFAULT_EPS_F);
    let reader = DatasetReader::open(input)?;
    match rc.mode {
        ReconstructMode::Cone | ReconstructMode::Axial => {
            expect_kind(&reader, "measurements", "cone/axial")?;
            let geometry = cfg.geometry()?;
            let pulse = cfg.pulse(&geometry)?;
            let (shape, values) = reader.read_f64("values")?;
            if shape != [geometry.mirror_positions.len(), geometry.detector_directions.len(), 2] {
                return Err(Error::DataMismatch(format!(
                    "measurement array shape {shape:?} does not match the configured geometry"
                )));
            }
            let m = crate::forward::MeasurementSet {
                geometry: geometry.clone(),
                pulse: pulse.clone(),
                units,
                values,
                imag_residual: reader.manifest.provenance["imag_residual"].as_f64().unwrap_or(0.0),
            };
            let rec = recover_scattered_spectrum(&m, eps_f)?;
            let samples = extract_chi_tilde_isotropic(&rec, &geometry, &pulse, units)?;
            match rc.mode {
                ReconstructMode::Cone => {
                    let cc = rc
                        .cone
                        .as_ref()
                        .ok_or_else(|| Error::Config("reconstruct.cone: missing cone grid".into()))?;
                    let kgrid = KGrid::new(cc.n, cc.spacing, Vector3::from_column_slice(&cc.origin))?;
                    let rec3 = cone_inversion(&samples, &kgrid, units)?;
                    let mut prov = provenance(cfg);
                    prov["report"] = json!({
                        "mode": "cone",
                        "eps_f": eps_f,
                        "coverage": rec3.coverage,
                        "imag_residual": rec3.imag_residual,
                        "filled_bins": rec3.filled_bins.iter().filter(|&&b| b).count(),
                    });
                    let n = kgrid.n;
                    let mut w = DatasetWriter::new(out, "reconstruction", hash, prov)?;
                    w.add_f64("field", &[n, n, n], &rec3.field.values)?;
                    let filled: Vec<f64> =
                        rec3.filled_bins.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                    w.add_f64("filled_bins", &[n, n, n], &filled)?;
                    // central transverse slice for plotting
                    let mid = n / 2;
                    let rows: Vec<Vec<f64>> = (0..n)
                        .flat_map(|i| {
                            let field = &rec3.field;
                            (0..n).map(move |j| {
                                let x = field.voxel_center(i, j, mid);
                                vec![x[0], x[1], field.value(i, j, mid)]
                            })
                        })
                        .collect();
                    write_csv(&out.join("slice_z_mid.csv"), &["x1", "x2", "chi"], &rows)?;
                    w.finish()
                }
                ReconstructMode::Axial => {
                    let ax = rc
                        .axial
                        .as_ref()
                        .ok_or_else(|| Error::Config("reconstruct.axial: missing depth grid".into()))?;
                    let det = geometry
                        .detector_directions
                        .iter()
                        .position(|t| (t - Vector3::new(0.0, 0.0, 1.0)).norm() <= 1e-10)
                        .ok_or_else(|| {
                            Error::DataMismatch(
                                "axial mode needs a detector direction e3 in the dataset".into(),
                            )
                        })?;
                    let window = ax.window.unwrap_or(BandWindow::RaisedCosine);
                    let profile = axial_inversion(&samples, det, window, ax.x0, ax.dx, ax.len, units)?;
                    let mut prov = provenance(cfg);
                    prov["report"] = json!({
                        "mode": "axial",
                        "eps_f": eps_f,
                        "window": window,
                        "resolution_cell": profile.resolution_cell,
                        "imag_residual": profile.imag_residual,
                    });
                    let mut w = DatasetWriter::new(out, "reconstruction", hash, prov)?;
                    w.add_f64("profile", &[profile.values.len()], &profile.values)?;
                    let rows: Vec<Vec<f64>> = profile
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| vec![profile.position(i), v])
                        .collect();
                    write_csv(&out.join("profile.csv"), &["x3", "chi"], &rows)?;
                    w.finish()
                }
                _ => unreachable!(),
            }
        }
        ReconstructMode::Dispersive => {
            expect_kind(&reader, "trace", "dispersive")?;
            let (trace, meta) = read_trace(&reader)?;
            let (t, n_min, n_max, k_tau) = match (&rc.dispersive, meta.plane_window) {
                (Some(d), _) => (d.t_support, d.n_min, d.n_max, d.k_tau),
                (None, Some((lo, hi))) => (meta.t_support, lo, hi, 0),
                (None, None) => {
                    return Err(Error::Config(
                        "reconstruct.dispersive: no plane window configured or recorded".into(),
                    ))
                }
            };
            let k_tau = if k_tau > 0 {
                k_tau
            } else {
                meta.k_bins.unwrap_or((t / trace.dt).round() as usize)
            };
            let bins = dispersive_recursion(&trace, t, n_min, n_max, k_tau, units)?;
            let mut prov = provenance(cfg);
            prov["report"] = json!({
                "mode": "dispersive", "t_support": t, "n_min": n_min, "n_max": n_max, "k_tau": k_tau,
            });
            let n_planes = (n_max - n_min + 1) as usize;
            let flat: Vec<f64> = bins.values.iter().flatten().copied().collect();
            let mut w = DatasetWriter::new(out, "reconstruction", hash, prov)?;
            w.add_f64("bins", &[n_planes, k_tau], &flat)?;
            let taus = bins.tau_samples();
            let rows: Vec<Vec<f64>> = (0..n_planes)
                .flat_map(|r| {
                    let bins = &bins;
                    let taus = &taus;
                    (0..k_tau).map(move |m| {
                        vec![(n_min + r as i64) as f64, taus[m], bins.values[r][m]]
                    })
                })
                .collect();
            write_csv(&out.join("bins.csv"), &["plane", "tau", "chi"], &rows)?;
            w.finish()
        }
        ReconstructMode::Layered => {
            expect_kind(&reader, "trace", "layered")?;
            let (trace, meta) = read_trace(&reader)?;
            let defaults = LayeredOptions::default();
            let (t, opts) = match &rc.layered {
                Some(l) => (
                    l.t_support,
                    LayeredOptions {
                        threshold_factor: l.threshold_factor.unwrap_or(defaults.threshold_factor),
                        trailing_window: l.trailing_window.unwrap_or(defaults.trailing_window),
                        update_incident: l.update_incident.unwrap_or(defaults.update_incident),
                        k_tau: l.k_tau.unwrap_or(defaults.k_tau),
                    },
                ),
                None => (meta.t_support, defaults),
            };
            let rec = layered_reconstruct(&trace, t, &opts, units)?;
            let mut prov = provenance(cfg);
            prov["report"] = json!({
                "mode": "layered",
                "boundary_times": rec.boundary_times,
                "amplitudes": rec.amplitudes,
                "residuals": rec.residuals,
                "model_note": rec.model_note,
            });
            let mut w = DatasetWriter::new(out, "reconstruction", hash, prov)?;
            w.add_f64("boundaries", &[rec.stack.boundaries.len()], &rec.stack.boundaries)?;
            w.add_f64("chi", &[rec.stack.chi.len()], &rec.stack.chi)?;
            if !rec.stack.profiles.is_empty() {
                let k = rec.stack.profiles[0].len();
                let flat: Vec<f64> = rec.stack.profiles.iter().flatten().copied().collect();
                w.add_f64("profiles", &[rec.stack.profiles.len(), k], &flat)?;
            }
            let rows: Vec<Vec<f64>> = rec
                .stack
                .chi
                .iter()
                .enumerate()
                .map(|(l, &x)| vec![rec.stack.boundaries[l], rec.stack.boundaries[l + 1], x])
                .collect();
            write_csv(&out.join("layers.csv"), &["top", "bottom", "chi"], &rows)?;
            w.finish()
        }
        ReconstructMode::Aniso => {
            expect_kind(&reader, "aniso-data", "aniso")?;
            let (bshape, blocks) = reader.read_f64("b_blocks")?;
            let (_, rflat) = reader.read_f64("rotations")?;
            let (_, theta) = reader.read_f64("theta")?;
            if bshape.first() != Some(&3) {
                return Err(Error::DataMismatch(format!(
                    "aniso mode needs exactly 3 rotations, got shape {bshape:?}"
                )));
            }
            let theta = Vector3::new(theta[0], theta[1], theta[2]);
            let mut rotations = [Matrix3::zeros(); 3];
            let mut b = [Matrix2::zeros(); 3];
            for r in 0..3 {
                rotations[r] = Matrix3::from_fn(|i, j| rflat[r * 9 + i * 3 + j]);
                b[r] = Matrix2::from_fn(|i, j| blocks[r * 4 + i * 2 + j]);
            }
            let (x, residual) = anisotropic_solve(&theta, &rotations, &b)?;
            let mut prov = provenance(cfg);
            prov["report"] = json!({ "mode": "aniso", "residual": residual });
            let mut w = DatasetWriter::new(out, "reconstruction", hash, prov)?;
            let flat: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| x[(i, j)])).collect();
            w.add_f64("x", &[3, 3], &flat)?;
            let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| x[(i, j)]).collect()).collect();
            write_csv(&out.join("matrix.csv"), &["c1", "c2", "c3"], &rows)?;
            w.finish()
        }
    }
}
