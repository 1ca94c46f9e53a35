//! On-disk snapshot format: raw little-endian f64 samples in row-major order
//! plus a JSON sidecar describing the grid and the moment of capture.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryRegime, GridSpec, ScalarField};

/// Sidecar metadata stored next to each `<name>.bin`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub dimension: usize,
    pub n: usize,
    pub half_width: f64,
    pub time: f64,
    pub epsilon: f64,
    pub name: String,
    #[serde(default = "default_regime")]
    pub boundary_regime: BoundaryRegime,
}

fn default_regime() -> BoundaryRegime {
    BoundaryRegime::FarFieldConstant
}

/// Write `field` as `<dir>/<name>.bin` + `<dir>/<name>.json`.
pub fn write_field(
    dir: &Path,
    name: &str,
    field: &ScalarField,
    time: f64,
    epsilon: f64,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(format!("{name}.bin")), bytes)?;
    let g = field.grid();
    let sidecar = Sidecar {
        dimension: g.dimension,
        n: g.points_per_axis,
        half_width: g.half_width,
        time,
        epsilon,
        name: name.to_string(),
        boundary_regime: g.boundary_regime,
    };
    fs::write(dir.join(format!("{name}.json")), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

/// Decode a snapshot payload against its sidecar.
pub fn decode_field(sidecar: &Sidecar, bytes: &[u8]) -> Result<ScalarField> {
    let grid = GridSpec::new(
        sidecar.dimension,
        sidecar.half_width,
        sidecar.n,
        sidecar.boundary_regime,
    )?;
    let expected = grid.len() * 8;
    if bytes.len() != expected {
        return Err(Error::Validation(format!(
            "snapshot '{}': payload is {} bytes, expected {expected}",
            sidecar.name,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::Validation(format!(
            "snapshot '{}': non-finite sample",
            sidecar.name
        )));
    }
    ScalarField::new(grid, values)
}

/// Parse a sidecar from JSON bytes.
pub fn parse_sidecar(bytes: &[u8]) -> Result<Sidecar> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn read_field(dir: &Path, name: &str) -> Result<(Sidecar, ScalarField)> {
    let sidecar = parse_sidecar(&fs::read(dir.join(format!("{name}.json")))?)?;
    let field = decode_field(&sidecar, &fs::read(dir.join(format!("{name}.bin")))?)?;
    Ok((sidecar, field))
}

/// List snapshot base names in a directory, sorted by recorded time.
pub fn list_snapshots(dir: &Path) -> Result<Vec<(Sidecar, PathBuf)>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let sidecar = parse_sidecar(&fs::read(&path)?)?;
            found.push((sidecar, path.with_extension("bin")));
        }
    }
    found.sort_by(|a, b| a.0.time.total_cmp(&b.0.time));
    Ok(found)
}
