//! State serialization: a self-describing JSON header next to a sample table.
//!
//! The header records the model parameters, grid layout, field form, time,
//! and support offset, plus the name of the sample file. Samples are one
//! record (x, f, g) per covered grid point, either little-endian 64-bit
//! floats (`.f64le`) or CSV text (`.csv`). Text mode prints shortest
//! round-trip decimals, so both modes reload bit-identically.

use super::{FieldState, Form, ModelParams};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Encoding of the sample table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// Little-endian f64 triples (x, f, g), one per covered grid point.
    Binary,
    /// CSV with header `x,f,g`, shortest round-trip decimals.
    Csv,
}

impl DataFormat {
    fn extension(self) -> &'static str {
        match self {
            DataFormat::Binary => "f64le",
            DataFormat::Csv => "csv",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    half_width: f64,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
struct StateHeader {
    schema: String,
    ell: u32,
    degree: u32,
    grid: GridHeader,
    form: Form,
    time: f64,
    /// Index of the first covered grid point (0 for full-line states).
    offset: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    flat_dim: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    flat_r_inner: Option<f64>,
    data_file: String,
    data_format: DataFormat,
}

const SCHEMA: &str = "wavemap-state/1";

/// Write `state` as `<path>` (JSON header) plus a sibling sample file with
/// the same stem and a format-specific extension.
pub fn save_state(state: &FieldState, path: &Path, format: DataFormat) -> Result<()> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad state path {}", path.display())))?;
    let data_name = format!("{stem}.{}", format.extension());
    let header = StateHeader {
        schema: SCHEMA.into(),
        ell: state.params().ell(),
        degree: state.params().degree(),
        grid: GridHeader {
            half_width: state.grid().half_width(),
            n_points: state.grid().len(),
        },
        form: state.form(),
        time: state.time(),
        offset: state.offset(),
        flat_dim: state.raw_flat_dim(),
        flat_r_inner: if state.form() == Form::FlatFree {
            Some(state.grid().r()[state.offset()])
        } else {
            None
        },
        data_file: data_name.clone(),
        data_format: format,
    };
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &header)
        .map_err(|e| Error::Serde(e.to_string()))?;

    let data_path = path.with_file_name(&data_name);
    let mut out = BufWriter::new(std::fs::File::create(&data_path)?);
    let xs = &state.grid().x()[state.offset()..];
    match format {
        DataFormat::Binary => {
            for i in 0..xs.len() {
                out.write_all(&xs[i].to_le_bytes())?;
                out.write_all(&state.f()[i].to_le_bytes())?;
                out.write_all(&state.g()[i].to_le_bytes())?;
            }
        }
        DataFormat::Csv => {
            writeln!(out, "x,f,g")?;
            for i in 0..xs.len() {
                writeln!(out, "{},{},{}", xs[i], state.f()[i], state.g()[i])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reload a state written by [`save_state`]. The grid is rebuilt from the
/// header and the stored x-column is checked against it bit-for-bit.
pub fn load_state(path: &Path) -> Result<FieldState> {
    let file = std::fs::File::open(path)?;
    let header: StateHeader = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Serde(e.to_string()))?;
    if header.schema != SCHEMA {
        return Err(Error::Serde(format!("unknown state schema {:?}", header.schema)));
    }
    let params = ModelParams::new(header.ell, header.degree)?;
    let grid = Arc::new(super::make_grid(header.grid.half_width, header.grid.n_points)?);
    let data_path = path.with_file_name(&header.data_file);
    let count = grid
        .len()
        .checked_sub(header.offset)
        .ok_or_else(|| Error::Serde("offset beyond grid".into()))?;

    let mut xs = Vec::with_capacity(count);
    let mut f = Vec::with_capacity(count);
    let mut g = Vec::with_capacity(count);
    match header.data_format {
        DataFormat::Binary => {
            let mut buf = Vec::new();
            std::fs::File::open(&data_path)?.read_to_end(&mut buf)?;
            if buf.len() != count * 24 {
                return Err(Error::Serde(format!(
                    "sample file holds {} bytes, expected {}",
                    buf.len(),
                    count * 24
                )));
            }
            for rec in buf.chunks_exact(24) {
                xs.push(f64::from_le_bytes(rec[0..8].try_into().unwrap()));
                f.push(f64::from_le_bytes(rec[8..16].try_into().unwrap()));
                g.push(f64::from_le_bytes(rec[16..24].try_into().unwrap()));
            }
        }
        DataFormat::Csv => {
            let reader = BufReader::new(std::fs::File::open(&data_path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if lineno == 0 {
                    continue; // column header
                }
                if line.trim().is_empty() {
                    continue;
                }
                let mut cols = line.split(',');
                let mut next = || -> Result<f64> {
                    cols.next()
                        .ok_or_else(|| Error::Serde(format!("short record at line {lineno}")))?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Serde(format!("line {lineno}: {e}")))
                };
                xs.push(next()?);
                f.push(next()?);
                g.push(next()?);
            }
            if xs.len() != count {
                return Err(Error::Serde(format!(
                    "sample file holds {} records, expected {count}",
                    xs.len()
                )));
            }
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        let want = grid.x()[header.offset + i];
        if x.to_bits() != want.to_bits() {
            return Err(Error::Serde(format!(
                "x column mismatch at record {i}: {x} vs grid {want}"
            )));
        }
    }

    match header.form {
        Form::Ue => FieldState::exterior(grid, params, f, g, header.time),
        Form::FlatFree => {
            let r_inner = header
                .flat_r_inner
                .ok_or_else(|| Error::Serde("flat state header lacks inner radius".into()))?;
            let dim = header.flat_dim.unwrap_or(params.dim());
            FieldState::flat(grid, params, dim, r_inner, f, g, header.time)
        }
        other => FieldState::full(grid, params, other, f, g, header.time),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, FieldState, Form, ModelParams};
    use std::sync::Arc;

    fn sample_state() -> FieldState {
        let grid = Arc::new(make_grid(8.0, 101).unwrap());
        let params = ModelParams::new(1, 1).unwrap();
        let f: Vec<f64> = grid.r().iter().map(|&r| 0.3 * r * (-0.5 * r * r).exp()).collect();
        let g: Vec<f64> = grid.r().iter().map(|&r| 0.1 * (-r * r).exp()).collect();
        FieldState::full(grid, params, Form::U, f, g, 1.25).unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let state = sample_state();
        save_state(&state, &path, DataFormat::Binary).unwrap();
        let back = load_state(&path).unwrap();
        assert_eq!(back.form(), state.form());
        assert_eq!(back.time(), state.time());
        assert_eq!(back.params(), state.params());
        assert!(back.grid().same_layout(state.grid()));
        for i in 0..state.f().len() {
            assert_eq!(back.f()[i].to_bits(), state.f()[i].to_bits());
            assert_eq!(back.g()[i].to_bits(), state.g()[i].to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let state = sample_state();
        save_state(&state, &path, DataFormat::Csv).unwrap();
        let back = load_state(&path).unwrap();
        for i in 0..state.f().len() {
            assert_eq!(back.f()[i].to_bits(), state.f()[i].to_bits());
            assert_eq!(back.g()[i].to_bits(), state.g()[i].to_bits());
        }
    }

    #[test]
    fn exterior_state_round_trips_with_offset() {
        let grid = Arc::new(make_grid(8.0, 101).unwrap());
        let params = ModelParams::new(1, 1).unwrap();
        let n = grid.len() - (grid.center() + 1);
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin() * 1e-3).collect();
        let g = vec![0.0; n];
        let state = FieldState::exterior(grid, params, f, g, 0.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.json");
        save_state(&state, &path, DataFormat::Binary).unwrap();
        let back = load_state(&path).unwrap();
        assert_eq!(back.offset(), state.offset());
        assert_eq!(back.f(), state.f());
    }

    #[test]
    fn truncated_sample_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        save_state(&sample_state(), &path, DataFormat::Binary).unwrap();
        let data = path.with_file_name("state.f64le");
        let bytes = std::fs::read(&data).unwrap();
        std::fs::write(&data, &bytes[..bytes.len() - 8]).unwrap();
        assert!(load_state(&path).is_err());
    }
}
