//! Run configuration: one human-editable file (TOML or JSON) per run, with
//! every tolerance and switch surfaced as a named key. Unknown keys are
//! rejected so a typo cannot silently fall back to a default. Command-line
//! flags mirror the config keys and override them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use wavemap_core::{Error, Result};

/// Which computation a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Harmonic,
    Evolve,
    Resolve,
    Exterior,
    Certify,
    Converge,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CommandKind::Harmonic => "harmonic",
            CommandKind::Evolve => "evolve",
            CommandKind::Resolve => "resolve",
            CommandKind::Exterior => "exterior",
            CommandKind::Certify => "certify",
            CommandKind::Converge => "converge",
        };
        f.write_str(s)
    }
}

/// Equivariance class and map degree.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub ell: u32,
    pub n: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { ell: 1, n: 1 }
    }
}

/// Radial grid: half-width X in the compactified coordinate x = arcsinh r,
/// and the (odd) total number of nodes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x: 12.0, n: 2049 }
    }
}

/// Which evolution drives an `evolve`, `resolve` or `converge` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowChoice {
    Psi,
    U,
    Linearized,
    FreeWormhole,
    FreeFlat,
}

impl std::str::FromStr for FlowChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "psi" => Ok(FlowChoice::Psi),
            "u" => Ok(FlowChoice::U),
            "linearized" => Ok(FlowChoice::Linearized),
            "free_wormhole" => Ok(FlowChoice::FreeWormhole),
            "free_flat" => Ok(FlowChoice::FreeFlat),
            other => Err(format!(
                "unknown flow {other:?}; expected psi | u | linearized | free_wormhole | free_flat"
            )),
        }
    }
}

/// Which flow carries the radiation field in the resolution diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiationChoice {
    Linearized,
    FreeWormhole,
}

/// Per-command knobs. One flat table with every key optional keeps the
/// schema strict (unknown keys still fail) while letting each command pick
/// the keys it needs; required-but-missing keys are reported per command.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Evolution horizon (time units).
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Courant factor in (0, 0.8]; omitted means the full stability bound.
    pub cfl: Option<f64>,
    /// Flow for evolve/converge (psi | u | linearized | free_wormhole | free_flat).
    pub flow: Option<FlowChoice>,
    /// Energy/flux recording cadence in steps.
    pub energy_every: Option<usize>,
    /// Absolute times at which to store full field snapshots.
    pub snapshot_times: Option<Vec<f64>>,
    /// Absorbing-layer switch (off by default; the preferred regime sizes
    /// the domain so signals never reach the edge).
    pub sponge: Option<bool>,
    pub sponge_fraction: Option<f64>,
    pub sponge_strength: Option<f64>,

    /// Initial-data bump: f += amp · exp(−(x − center)²/width²) (on top of
    /// the harmonic map for the psi flow).
    pub bump_amp: Option<f64>,
    pub bump_center: Option<f64>,
    pub bump_width: Option<f64>,
    /// Same bump shape added to the velocity component.
    pub bump_velocity_amp: Option<f64>,

    /// Flat dimension d (odd ≥ 3) for free_flat / exterior / certify.
    pub flat_dim: Option<u32>,
    /// Inner Dirichlet radius for free_flat (0 = regular origin).
    pub inner_radius: Option<f64>,
    /// Projection / certification radius R.
    pub radius: Option<f64>,
    /// Number of randomized trials for certify (1 = the configured bump).
    pub trials: Option<usize>,

    /// Radiation-extraction times for resolve.
    pub extraction_times: Option<Vec<f64>>,
    /// Half-width of the local-energy window |r| ≤ A for resolve.
    pub window_radius: Option<f64>,
    /// Radiation flow for resolve (linearized | free_wormhole).
    pub radiation_flow: Option<RadiationChoice>,

    /// Harmonic-solver settings.
    pub tol_b: Option<f64>,
    pub x_end: Option<f64>,
    pub dx_ode: Option<f64>,

    /// Grid-doubling levels for converge (≥ 3 gives a measured order).
    pub levels: Option<usize>,
    /// Emit field snapshots as gnuplot-ready whitespace tables as well.
    pub plot_files: Option<bool>,
}

/// A fully specified run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub options: Options,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    /// Parse a config file; the format follows the extension (`.toml` or
    /// `.json`).
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "toml" => toml::from_str(&text)
                .map_err(|e| Error::Serde(format!("{}: {e}", path.display()))),
            "json" => serde_json::from_str(&text)
                .map_err(|e| Error::Serde(format!("{}: {e}", path.display()))),
            other => Err(Error::InvalidArgument(format!(
                "config {} has unsupported extension {other:?} (need .toml or .json)",
                path.display()
            ))),
        }
    }

    /// Structural validation shared by every command. Numerical
    /// preconditions deeper than this are enforced by the library calls.
    pub fn validate(&self) -> Result<()> {
        if self.grid.n % 2 == 0 || self.grid.n < 33 {
            return Err(Error::InvalidArgument(format!(
                "grid.n must be odd and >= 33 (node at the throat), got {}",
                self.grid.n
            )));
        }
        if !(self.grid.x.is_finite() && self.grid.x > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid.x must be positive, got {}",
                self.grid.x
            )));
        }
        if let Some(cfl) = self.options.cfl {
            if !(cfl > 0.0 && cfl <= wavemap_core::CFL_MAX) {
                return Err(Error::InvalidArgument(format!(
                    "cfl must lie in (0, {}], got {cfl}",
                    wavemap_core::CFL_MAX
                )));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidArgument("output_dir must be non-empty".into()));
        }
        Ok(())
    }

    /// Output directory with the `WAVEMAP_OUTPUT_ROOT` environment variable
    /// applied to relative paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if self.output_dir.is_absolute() {
            return self.output_dir.clone();
        }
        match std::env::var_os("WAVEMAP_OUTPUT_ROOT") {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Content hash of the run: the config serialized canonically with the
    /// output location blanked, so that the same computation written to two
    /// different directories produces byte-identical artifacts.
    pub fn content_hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(7 + 64);
        hex.push_str("sha256:");
        for b in digest {
            use std::fmt::Write;
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }
}
