//! Artifact emission. Every run writes a `manifest.json` naming the content
//! hash of the config that produced it, the crate version, the tolerances in
//! effect, and the headline results; data files sit next to it. All numbers
//! are written with shortest round-trip formatting, so identical
//! computations produce byte-identical files.

use crate::config::RunConfig;
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use wavemap_core::{Error, EvolutionLog, Result};

/// Headline metrics a run reports upward for sweep aggregation: ordered
/// (name, value) pairs.
pub type Metrics = Vec<(String, f64)>;

/// Everything a command hands back for the manifest.
pub struct RunOutcome {
    /// Command-specific results block (already serialized).
    pub results: Value,
    /// Named tolerances/constants the run relied on.
    pub tolerances: Value,
    /// Flat metrics for the sweep table.
    pub metrics: Metrics,
}

/// Create the output directory (parents included) and fail with a
/// validation error if a manifest is already present — runs never clobber
/// each other.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    let manifest = dir.join("manifest.json");
    if manifest.exists() {
        return Err(Error::InvalidArgument(format!(
            "output directory {} already holds a manifest",
            dir.display()
        )));
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'static str,
    command: String,
    config_hash: String,
    crate_version: &'static str,
    config: &'a RunConfig,
    tolerances: &'a Value,
    results: &'a Value,
}

/// Write `manifest.json` for a completed run.
pub fn write_manifest(dir: &Path, config: &RunConfig, outcome: &RunOutcome) -> Result<PathBuf> {
    let manifest = Manifest {
        schema: "run-manifest/1",
        command: config.command.to_string(),
        config_hash: config.content_hash(),
        crate_version: env!("CARGO_PKG_VERSION"),
        config,
        tolerances: &outcome.tolerances,
        results: &outcome.results,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

/// Write a CSV file with shortest round-trip decimals.
pub fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Monitor series of an evolution as `energy.csv`:
/// `t,total,kinetic,gradient,potential,boundary_flux`.
pub fn write_energy_csv(dir: &Path, log: &EvolutionLog) -> Result<PathBuf> {
    let path = dir.join("energy.csv");
    let rows = log.times.iter().zip(&log.energy).zip(&log.boundary_flux).map(|((t, e), fx)| {
        vec![*t, e.total, e.kinetic, e.gradient, e.potential_part, *fx]
    });
    write_csv(&path, "t,total,kinetic,gradient,potential,boundary_flux", rows)?;
    Ok(path)
}

/// A field state as a gnuplot-ready whitespace table `x r f g`.
pub fn write_plot_table(path: &Path, state: &wavemap_core::FieldState) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "# x r f g   (t = {})", state.time())?;
    let grid = state.grid();
    let off = state.offset();
    for (k, (f, g)) in state.f().iter().zip(state.g()).enumerate() {
        let i = off + k;
        writeln!(w, "{} {} {f} {g}", grid.x()[i], grid.r()[i])?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience for building the `results` JSON block field by field.
pub fn json_object(fields: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in fields {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

/// `f64` → JSON number, keeping non-finite values representable.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(v.to_string()))
}
