//! Run configuration: one JSON document drives phantom construction,
//! measurement synthesis and reconstruction. The raw config bytes are
//! hashed (SHA-256) into every dataset's provenance record.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dataset::sha256_hex;
use crate::error::{Error, Result};
use crate::inversion::BandWindow;
use crate::layered::LayerStack;
use crate::model::{make_pulse, BinnedScalarGrid, Geometry, Phantom, Pulse, PulseKind, ScalarGrid, TimeBins, Units};

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Wave speed; lengths are in units of the centre wavelength.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub phantom: Option<PhantomConfig>,
    #[serde(default)]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    #[serde(default)]
    pub reconstruct: Option<ReconstructConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomConfig {
    GaussianBlobs {
        centers: Vec<[f64; 3]>,
        widths: Vec<f64>,
        amplitudes: Vec<f64>,
    },
    Layered {
        /// Boundary depths, strictly decreasing, last entry 0.
        boundaries: Vec<f64>,
        chi: Vec<f64>,
        t_support: f64,
    },
    DispersiveScalar {
        t_support: f64,
        n_min: i64,
        /// One time-bin profile per plane, row-major `[plane][bin]`.
        profiles: Vec<Vec<f64>>,
        theta: [f64; 3],
    },
    AnisotropicConstant {
        matrix: [[f64; 3]; 3],
        theta: [f64; 3],
        rotations: Vec<[[f64; 3]; 3]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub kind: PulseKind,
    pub center_freq: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub d: f64,
    pub r_max: f64,
    pub delta: f64,
    pub mirror_spacing: f64,
    pub n_mirrors: usize,
    pub directions_per_axis: usize,
    pub max_slope: f64,
    pub polarization: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructMode {
    Cone,
    Axial,
    Dispersive,
    Layered,
    Aniso,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxialGridConfig {
    pub x0: f64,
    pub dx: f64,
    pub len: usize,
    #[serde(default)]
    pub window: Option<BandWindow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeGridConfig {
    pub n: usize,
    pub spacing: f64,
    pub origin: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveConfig {
    pub t_support: f64,
    pub n_min: i64,
    pub n_max: i64,
    #[serde(default)]
    pub k_tau: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredReconstructConfig {
    pub t_support: f64,
    #[serde(default)]
    pub threshold_factor: Option<f64>,
    #[serde(default)]
    pub trailing_window: Option<usize>,
    #[serde(default)]
    pub update_incident: Option<bool>,
    #[serde(default)]
    pub k_tau: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub mode: ReconstructMode,
    #[serde(default)]
    pub eps_f: Option<f64>,
    #[serde(default)]
    pub axial: Option<AxialGridConfig>,
    #[serde(default)]
    pub cone: Option<ConeGridConfig>,
    #[serde(default)]
    pub dispersive: Option<DispersiveConfig>,
    #[serde(default)]
    pub layered: Option<LayeredReconstructConfig>,
}

/// Parse a config file; returns the config and the SHA-256 of its raw bytes.
pub fn load_config(path: &Path) -> Result<(RunConfig, String)> {
    let bytes = std::fs::read(path)?;
    let cfg: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, sha256_hex(&bytes)))
}

impl RunConfig {
    pub fn units(&self) -> Units {
        Units { c: self.c }
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let g = self
            .geometry
            .as_ref()
            .ok_or_else(|| Error::Config("missing geometry section".into()))?;
        let mirrors = Geometry::uniform_mirrors(g.r_max, g.mirror_spacing, g.n_mirrors);
        Geometry::new(
            g.d,
            g.r_max,
            g.delta,
            mirrors,
            Geometry::direction_grid(g.directions_per_axis, g.max_slope),
            Vector3::from_column_slice(&g.polarization),
        )
    }

    pub fn pulse(&self, geometry: &Geometry) -> Result<Pulse> {
        let p = self
            .pulse
            .as_ref()
            .ok_or_else(|| Error::Config("missing pulse section".into()))?;
        make_pulse(p.kind, p.center_freq, p.bandwidth, geometry, self.units())
    }

    /// Build the phantom described by the config. Layered configs return
    /// the stack separately via [`RunConfig::layer_stack`].
    pub fn phantom(&self) -> Result<Phantom> {
        let units = self.units();
        match self
            .phantom
            .as_ref()
            .ok_or_else(|| Error::Config("missing phantom section".into()))?
        {
            PhantomConfig::GaussianBlobs { centers, widths, amplitudes } => {
                let centers: Vec<Vector3<f64>> =
                    centers.iter().map(|c| Vector3::from_column_slice(c)).collect();
                crate::model::make_gaussian_phantom(&centers, widths, amplitudes)
            }
            PhantomConfig::DispersiveScalar { t_support, n_min, profiles, theta } => {
                dispersive_phantom(*t_support, *n_min, profiles, theta, units)
            }
            PhantomConfig::Layered { .. } => Err(Error::Config(
                "layered phantoms are handled as layer stacks, not voxel phantoms".into(),
            )),
            PhantomConfig::AnisotropicConstant { .. } => Err(Error::Config(
                "anisotropic-constant phantoms are handled as polarization data".into(),
            )),
        }
    }

    pub fn layer_stack(&self) -> Result<(LayerStack, f64)> {
        match self.phantom.as_ref() {
            Some(PhantomConfig::Layered { boundaries, chi, t_support }) => {
                let stack = LayerStack::new(boundaries.clone(), chi.clone())?;
                let min_thickness = boundaries
                    .windows(2)
                    .map(|w| w[0] - w[1])
                    .fold(f64::INFINITY, f64::min);
                if !(*t_support < 2.0 / self.c * min_thickness) {
                    return Err(Error::Config(format!(
                        "phantom.t_support: bin width {t_support} must stay below (2/c) x min \
                         layer thickness = {}",
                        2.0 / self.c * min_thickness
                    )));
                }
                Ok((stack, *t_support))
            }
            _ => Err(Error::Config("config does not describe a layered phantom".into())),
        }
    }

    pub fn aniso_data(&self) -> Result<(Matrix3<f64>, Vector3<f64>, Vec<Matrix3<f64>>)> {
        match self.phantom.as_ref() {
            Some(PhantomConfig::AnisotropicConstant { matrix, theta, rotations }) => {
                let m = Matrix3::from_fn(|i, j| matrix[i][j]);
                let theta = Vector3::from_column_slice(theta);
                if (theta.norm() - 1.0).abs() > 1e-9 || theta[2] <= 0.0 {
                    return Err(Error::Config("phantom.theta must be a unit vector with theta_3 > 0".into()));
                }
                let rots = rotations.iter().map(|r| Matrix3::from_fn(|i, j| r[i][j])).collect();
                Ok((m, theta, rots))
            }
            _ => Err(Error::Config("config does not describe anisotropic polarization data".into())),
        }
    }
}

/// Build a dispersive scalar phantom from per-plane bin profiles: plane `n`
/// occupies depths `x₃ ∈ (c(n−½)T/2, c(n+½)T/2]` along the trace direction.
pub fn dispersive_phantom(
    t_support: f64,
    n_min: i64,
    profiles: &[Vec<f64>],
    theta: &[f64; 3],
    units: Units,
) -> Result<Phantom> {
    if profiles.is_empty() || !(t_support > 0.0) {
        return Err(Error::Config("dispersive phantom needs planes and t_support > 0".into()));
    }
    let k = profiles[0].len();
    if k == 0 || profiles.iter().any(|p| p.len() != k) {
        return Err(Error::Config("all plane profiles need the same positive bin count".into()));
    }
    let theta = Vector3::from_column_slice(theta);
    if (theta.norm() - 1.0).abs() > 1e-9 || theta[2] <= 0.0 {
        return Err(Error::Config("phantom.theta must be a unit vector with theta_3 > 0".into()));
    }
    // one voxel layer per plane along e3; transverse extent one voxel
    let n_planes = profiles.len();
    let dz = units.c * t_support / 2.0;
    let grid = ScalarGrid {
        origin: Vector3::new(-dz / 2.0, -dz / 2.0, (n_min as f64 - 0.5) * dz),
        spacing: dz,
        shape: [1, 1, n_planes],
        values: profiles.iter().map(|p| p.iter().sum::<f64>() / k as f64).collect(),
    };
    let bins = TimeBins::new(t_support, k)?;
    // bin_values[m][voxel]: with a 1x1xN grid the voxel index is the plane
    let bin_values: Vec<Vec<f64>> = (0..k)
        .map(|m| profiles.iter().map(|p| p[m]).collect())
        .collect();
    Ok(Phantom::DispersiveScalar(BinnedScalarGrid { grid, bins, bin_values }))
}
