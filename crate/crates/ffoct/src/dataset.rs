//! Directory-per-dataset persistence: a JSON manifest plus raw binary
//! arrays (little-endian, row-major; complex data as interleaved float64
//! pairs). All file writes are atomic (write to a sibling temporary path,
//! then rename), and serialization round-trips are bit-exact.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const FORMAT_NAME: &str = "ffoct-dataset";

/// Element type of a stored array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DType {
    #[serde(rename = "float64")]
    Float64,
    #[serde(rename = "complex128")]
    Complex128,
}

/// Manifest entry describing one binary array file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayMeta {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub byte_order: String,
    pub layout: String,
    pub file: String,
}

/// Dataset manifest: format marker, tool version, provenance and the array
/// table. `provenance` carries the config hash plus whatever parameters
/// (pulse, geometry, masks, thresholds) produced the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub kind: String,
    pub config_hash: String,
    pub provenance: serde_json::Value,
    pub arrays: Vec<ArrayMeta>,
}

/// SHA-256 of arbitrary bytes, hex-encoded; used for config provenance.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Atomically write `bytes` to `path` (write sibling temp file, rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().ok_or_else(|| Error::Io(std::io::Error::other("path has no parent")))?;
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("array")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Incrementally built dataset directory; arrays are written on `add_*`,
/// the manifest on `finish`.
pub struct DatasetWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl DatasetWriter {
    pub fn new(dir: &Path, kind: &str, config_hash: &str, provenance: serde_json::Value) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(DatasetWriter {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                format: FORMAT_NAME.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                kind: kind.into(),
                config_hash: config_hash.into(),
                provenance,
                arrays: Vec::new(),
            },
        })
    }

    fn check_shape(name: &str, shape: &[usize], len: usize) -> Result<()> {
        let expect: usize = shape.iter().product();
        if expect != len {
            return Err(Error::InvalidArgument(format!(
                "array {name}: shape {shape:?} holds {expect} elements, got {len}"
            )));
        }
        Ok(())
    }

    pub fn add_f64(&mut self, name: &str, shape: &[usize], values: &[f64]) -> Result<()> {
        Self::check_shape(name, shape, values.len())?;
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.push(name, DType::Float64, shape, bytes)
    }

    pub fn add_complex(&mut self, name: &str, shape: &[usize], values: &[Complex64]) -> Result<()> {
        Self::check_shape(name, shape, values.len())?;
        let mut bytes = Vec::with_capacity(values.len() * 16);
        for v in values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        self.push(name, DType::Complex128, shape, bytes)
    }

    fn push(&mut self, name: &str, dtype: DType, shape: &[usize], bytes: Vec<u8>) -> Result<()> {
        if self.manifest.arrays.iter().any(|a| a.name == name) {
            return Err(Error::InvalidArgument(format!("duplicate array name {name}")));
        }
        let file = format!("{name}.bin");
        atomic_write(&self.dir.join(&file), &bytes)?;
        self.manifest.arrays.push(ArrayMeta {
            name: name.into(),
            dtype,
            shape: shape.to_vec(),
            byte_order: "little-endian".into(),
            layout: "row-major".into(),
            file,
        });
        Ok(())
    }

    pub fn finish(self) -> Result<Manifest> {
        let json = serde_json::to_vec_pretty(&self.manifest)?;
        atomic_write(&self.dir.join(MANIFEST_NAME), &json)?;
        Ok(self.manifest)
    }
}

/// Read access to a dataset directory.
pub struct DatasetReader {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl DatasetReader {
    pub fn open(dir: &Path) -> Result<Self> {
        let bytes = fs::read(dir.join(MANIFEST_NAME))?;
        let manifest: Manifest = serde_json::from_slice(&bytes)?;
        if manifest.format != FORMAT_NAME {
            return Err(Error::DataMismatch(format!(
                "not a dataset directory: format {}",
                manifest.format
            )));
        }
        Ok(DatasetReader { dir: dir.to_path_buf(), manifest })
    }

    pub fn meta(&self, name: &str) -> Result<&ArrayMeta> {
        self.manifest
            .arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::DataMismatch(format!("dataset has no array {name}")))
    }

    fn raw(&self, meta: &ArrayMeta, elem_bytes: usize) -> Result<Vec<u8>> {
        let bytes = fs::read(self.dir.join(&meta.file))?;
        let expect: usize = meta.shape.iter().product::<usize>() * elem_bytes;
        if bytes.len() != expect {
            return Err(Error::DataMismatch(format!(
                "array {}: file holds {} bytes, manifest implies {expect}",
                meta.name,
                bytes.len()
            )));
        }
        Ok(bytes)
    }

    pub fn read_f64(&self, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
        let meta = self.meta(name)?.clone();
        if meta.dtype != DType::Float64 {
            return Err(Error::DataMismatch(format!("array {name} is not float64")));
        }
        let bytes = self.raw(&meta, 8)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((meta.shape, values))
    }

    pub fn read_complex(&self, name: &str) -> Result<(Vec<usize>, Vec<Complex64>)> {
        let meta = self.meta(name)?.clone();
        if meta.dtype != DType::Complex128 {
            return Err(Error::DataMismatch(format!("array {name} is not complex128")));
        }
        let bytes = self.raw(&meta, 16)?;
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Ok((meta.shape, values))
    }
}

/// Write a CSV table: '.' decimal separator, scientific notation with 17
/// significant digits (lossless float64 text round-trip). Atomic.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}
