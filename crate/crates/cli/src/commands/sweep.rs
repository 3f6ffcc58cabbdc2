//! `sweep`: run a list of config files in parallel and aggregate their
//! headline metrics into one CSV. Every config is parsed and validated up
//! front (duplicate output directories are rejected before anything runs);
//! a failing child is recorded and does not abort its siblings.

use crate::artifacts::Metrics;
use crate::commands::run_config;
use crate::config::RunConfig;
use std::io::Write;
use std::path::{Path, PathBuf};
use wavemap_core::{Error, Result};

pub struct SweepRow {
    pub config_path: PathBuf,
    pub command: String,
    pub outcome: Result<Metrics>,
}

/// Parse, validate, run (in parallel), and write `sweep_summary.csv` under
/// `output`. Returns the per-config rows in input order.
pub fn run(config_paths: &[PathBuf], output: &Path) -> Result<Vec<SweepRow>> {
    let mut configs: Vec<RunConfig> = Vec::with_capacity(config_paths.len());
    for path in config_paths {
        let cfg = RunConfig::load(path)?;
        cfg.validate()?;
        configs.push(cfg);
    }
    let mut dirs: Vec<PathBuf> = configs.iter().map(|c| c.resolved_output_dir()).collect();
    dirs.sort();
    if dirs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "sweep configs share an output directory; every run needs its own".into(),
        ));
    }

    let rows: Vec<SweepRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = config_paths
            .iter()
            .zip(&configs)
            .map(|(path, cfg)| {
                scope.spawn(move || SweepRow {
                    config_path: path.clone(),
                    command: cfg.command.to_string(),
                    outcome: run_config(cfg),
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });

    std::fs::create_dir_all(output)?;
    let file = std::fs::File::create(output.join("sweep_summary.csv"))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "config,command,status,metric,value")?;
    for row in &rows {
        let path = row.config_path.display();
        match &row.outcome {
            Ok(metrics) if metrics.is_empty() => {
                writeln!(w, "{path},{},ok,,", row.command)?;
            }
            Ok(metrics) => {
                for (name, value) in metrics {
                    writeln!(w, "{path},{},ok,{name},{value}", row.command)?;
                }
            }
            Err(e) => {
                let kind = if e.is_validation() { "invalid" } else { "failed" };
                writeln!(w, "{path},{},{kind},,", row.command)?;
            }
        }
    }
    w.flush()?;
    Ok(rows)
}
