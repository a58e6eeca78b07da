//! Config-driven dataset pipeline, the same path the `ffoct` binary takes:
//! parse a JSON run configuration, synthesize a layered-medium trace dataset
//! and reconstruct the stack from it. Datasets are directories with a JSON
//! manifest plus little-endian row-major binary arrays.
//!
//! Run with `cargo run --release --example dataset_pipeline`.

use ffoct::config::RunConfig;
use ffoct::dataset::{sha256_hex, DatasetReader};
use ffoct::pipeline::{run_reconstruct, run_simulate};

fn main() -> ffoct::Result<()> {
    let raw = r#"{
        "phantom": {
            "kind": "layered",
            "boundaries": [9.0, 6.0, 2.25, 0.0],
            "chi": [0.4, 0.9, 0.6],
            "t_support": 1.5
        },
        "reconstruct": { "mode": "layered" }
    }"#;
    let cfg: RunConfig = serde_json::from_str(raw).map_err(ffoct::Error::from)?;
    let hash = sha256_hex(raw.as_bytes());

    let dir = std::env::temp_dir().join("ffoct_dataset_pipeline");
    let trace_dir = dir.join("trace");
    let rec_dir = dir.join("reconstruction");

    let manifest = run_simulate(&cfg, &hash, &trace_dir)?;
    println!(
        "wrote {} dataset to {} (config hash {}...)",
        manifest.kind,
        trace_dir.display(),
        &hash[..12]
    );
    for a in &manifest.arrays {
        println!("  array {:10} {:?} {:?} ({})", a.name, a.shape, a.dtype, a.file);
    }

    run_reconstruct(&cfg, &hash, &trace_dir, &rec_dir)?;
    let reader = DatasetReader::open(&rec_dir)?;
    let (_, boundaries) = reader.read_f64("boundaries")?;
    let (_, chi) = reader.read_f64("chi")?;
    println!("recovered boundaries: {boundaries:.3?}");
    println!("recovered chi:        {chi:.6?}");
    println!("plot export: {}", rec_dir.join("layers.csv").display());
    Ok(())
}
