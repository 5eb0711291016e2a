use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ScanAxis, ScanConfig, ScanPoint};
use crate::error::{Error, Result};
use crate::io::report::ParamsRecord;
use crate::io::{format_spectrum, read_spectrum, sha256_hex, write_atomic};
use crate::model::Spectrum;

pub const RNG_NAME: &str =
    "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), set_stream(scan index)";
const SCHEMA: &str = "cavfeed-fixture/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub file: String,
    pub index: usize,
    #[serde(rename = "detuning_GHz")]
    pub detuning_ghz: f64,
    #[serde(rename = "power_uW")]
    pub power_uw: f64,
    #[serde(rename = "temperature_K")]
    pub temperature_k: Option<f64>,
    pub sha256: String,
    /// Generation parameters of the noise-free model.
    pub truth: ParamsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub name: String,
    pub seed: u64,
    pub rng: String,
    pub scan: ScanConfig,
    pub files: Vec<FixtureFile>,
}

fn label(cfg: &ScanConfig, p: &ScanPoint) -> String {
    match cfg.axis {
        ScanAxis::Temperature { .. } => format!("T{}K", p.temperature_k.unwrap_or_default()),
        ScanAxis::Detuning { .. } => format!("d{:+}GHz", p.detuning_ghz),
        ScanAxis::Power { .. } => format!("P{}uW", p.power_uw),
    }
}

/// Writes one CSV per scan point plus `manifest.json` into `dir` and
/// returns the manifest path.
pub fn emit_fixture(
    name: &str,
    cfg: &ScanConfig,
    points: &[ScanPoint],
    dir: &Path,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(points.len());
    for p in points {
        let file = format!("{:03}_{}.csv", p.index, label(cfg, p));
        let text = format_spectrum(&p.spectrum);
        write_atomic(&dir.join(&file), text.as_bytes())?;
        files.push(FixtureFile {
            file,
            index: p.index,
            detuning_ghz: p.detuning_ghz,
            power_uw: p.power_uw,
            temperature_k: p.temperature_k,
            sha256: sha256_hex(text.as_bytes()),
            truth: ParamsRecord::from(&p.truth),
        });
    }
    let manifest = Manifest {
        schema: SCHEMA.into(),
        name: name.into(),
        seed: cfg.seed,
        rng: RNG_NAME.into(),
        scan: cfg.clone(),
        files,
    };
    let path = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    Ok(path)
}

/// Loads a manifest and every spectrum it lists.
pub fn read_fixture(manifest_path: &Path) -> Result<(Manifest, Vec<Spectrum>)> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.schema != SCHEMA {
        return Err(Error::input(format!(
            "unsupported manifest schema '{}'",
            manifest.schema
        )));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let spectra = manifest
        .files
        .iter()
        .map(|f| read_spectrum(&dir.join(&f.file)))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, spectra))
}
