//! Harmonic-map serialization: a JSON manifest (parameters, shooting results,
//! solver settings, comparison tolerances) next to a CSV sample table.
//!
//! The sample table carries one row per half-grid node x ≥ 0 with columns
//! `x,q,qx,dev,devx`; the left half of the map is reconstructed from the
//! reflection symmetry Q(−x) = nπ − Q(x) on load. Decimals are shortest
//! round-trip, so a save/load cycle is bit-identical.

use super::{HarmonicMap, SolveSettings};
use crate::model::{make_grid, ModelParams};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

const SCHEMA: &str = "harmonic-map/1";

/// Comparison tolerances recorded alongside a stored map, for use when a
/// fresh solve is checked against the stored one (regression anchoring).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MapTolerances {
    /// Absolute tolerance on the throat slope b_*.
    pub b_star_abs: f64,
    /// Relative tolerance on the tail coefficient α.
    pub alpha_rel: f64,
    /// Sup-norm tolerance on the stored deviation samples.
    pub dev_sup: f64,
}

impl Default for MapTolerances {
    fn default() -> Self {
        MapTolerances { b_star_abs: 1e-9, alpha_rel: 1e-6, dev_sup: 1e-8 }
    }
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    half_width: f64,
    n_points: usize,
}

/// On-disk description of a [`HarmonicMap`].
#[derive(Serialize, Deserialize)]
pub struct MapManifest {
    pub schema: String,
    pub ell: u32,
    pub degree: u32,
    pub b_star: f64,
    pub alpha: f64,
    pub alpha_drift: f64,
    grid: GridHeader,
    pub settings: SolveSettings,
    pub tolerances: MapTolerances,
    pub data_file: String,
}

/// Write `map` as `<path>` (JSON manifest) plus a sibling `<stem>.csv`
/// sample table. `settings` records how the map was produced.
pub fn save_map(
    map: &HarmonicMap,
    settings: &SolveSettings,
    tolerances: &MapTolerances,
    path: &Path,
) -> Result<()> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad manifest path {}", path.display())))?;
    let data_name = format!("{stem}.csv");
    let manifest = MapManifest {
        schema: SCHEMA.into(),
        ell: map.params().ell(),
        degree: map.params().degree(),
        b_star: map.b_star(),
        alpha: map.alpha(),
        alpha_drift: map.alpha_drift(),
        grid: GridHeader {
            half_width: map.grid().half_width(),
            n_points: map.grid().len(),
        },
        settings: settings.clone(),
        tolerances: *tolerances,
        data_file: data_name.clone(),
    };
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)
        .map_err(|e| Error::Serde(e.to_string()))?;

    let mut out = BufWriter::new(std::fs::File::create(path.with_file_name(&data_name))?);
    writeln!(out, "x,q,qx,dev,devx")?;
    let c = map.grid().center();
    for j in 0..map.dev().len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            map.grid().x()[c + j],
            map.q()[c + j],
            map.qx()[c + j],
            map.dev()[j],
            map.devx()[j]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reload a map written by [`save_map`]. The x column is checked bit-for-bit
/// against the rebuilt grid and the q column against the reconstruction from
/// the deviation samples.
pub fn load_map(path: &Path) -> Result<(HarmonicMap, MapManifest)> {
    let file = std::fs::File::open(path)?;
    let manifest: MapManifest = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Serde(e.to_string()))?;
    if manifest.schema != SCHEMA {
        return Err(Error::Serde(format!("unknown map schema {:?}", manifest.schema)));
    }
    let params = ModelParams::new(manifest.ell, manifest.degree)?;
    let grid = Arc::new(make_grid(manifest.grid.half_width, manifest.grid.n_points)?);
    let half = grid.len() - grid.center();

    let reader = BufReader::new(std::fs::File::open(path.with_file_name(&manifest.data_file))?);
    let mut dev = Vec::with_capacity(half);
    let mut devx = Vec::with_capacity(half);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Serde(format!("line {lineno}: expected 5 columns")));
        }
        let parse = |k: usize| -> Result<f64> {
            cols[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Serde(format!("line {lineno}: {e}")))
        };
        let j = dev.len();
        if j >= half {
            return Err(Error::Serde("sample table longer than the half grid".into()));
        }
        let x = parse(0)?;
        let want = grid.x()[grid.center() + j];
        if x.to_bits() != want.to_bits() {
            return Err(Error::Serde(format!("x mismatch at row {j}: {x} vs grid {want}")));
        }
        let q = parse(1)?;
        dev.push(parse(3)?);
        devx.push(parse(4)?);
        let back = params.boundary_value() - dev[j];
        if q.to_bits() != back.to_bits() {
            return Err(Error::Serde(format!(
                "q column inconsistent with deviation at row {j}: {q} vs {back}"
            )));
        }
    }
    if dev.len() != half {
        return Err(Error::Serde(format!(
            "sample table holds {} rows, half grid needs {half}",
            dev.len()
        )));
    }
    let map = HarmonicMap::from_parts(
        params,
        grid,
        dev,
        devx,
        manifest.b_star,
        manifest.alpha,
        manifest.alpha_drift,
    );
    Ok((map, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::solve_q;
    use crate::model::make_grid;

    #[test]
    fn map_round_trip_is_bit_identical() {
        let grid = Arc::new(make_grid(8.0, 257).unwrap());
        let params = ModelParams::new(1, 1).unwrap();
        let settings = SolveSettings { x_end: 8.0, ..Default::default() };
        let map = solve_q(&grid, params, &settings).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map_l1_n1.json");
        save_map(&map, &settings, &MapTolerances::default(), &path).unwrap();
        let (back, manifest) = load_map(&path).unwrap();

        assert_eq!(manifest.ell, 1);
        assert_eq!(back.b_star().to_bits(), map.b_star().to_bits());
        assert_eq!(back.alpha().to_bits(), map.alpha().to_bits());
        for j in 0..map.dev().len() {
            assert_eq!(back.dev()[j].to_bits(), map.dev()[j].to_bits());
            assert_eq!(back.devx()[j].to_bits(), map.devx()[j].to_bits());
        }
        for i in 0..map.q().len() {
            assert_eq!(back.q()[i].to_bits(), map.q()[i].to_bits());
        }
    }

    #[test]
    fn tampered_q_column_is_rejected() {
        let grid = Arc::new(make_grid(8.0, 257).unwrap());
        let params = ModelParams::new(1, 1).unwrap();
        let settings = SolveSettings { x_end: 8.0, ..Default::default() };
        let map = solve_q(&grid, params, &settings).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.json");
        save_map(&map, &settings, &MapTolerances::default(), &path).unwrap();

        let data = path.with_file_name("map.csv");
        let text = std::fs::read_to_string(&data).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // Perturb the q value on some interior row.
        let row = 5;
        let cols: Vec<&str> = lines[row].split(',').collect();
        let bad = format!("{},{},{},{},{}", cols[0], 1.234, cols[2], cols[3], cols[4]);
        lines[row] = bad;
        std::fs::write(&data, lines.join("\n")).unwrap();
        assert!(load_map(&path).is_err());
    }
}
