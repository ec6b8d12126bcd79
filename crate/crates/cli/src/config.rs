use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Oscillatory potential for a target φ, reconstructed as is.
    Liminf,
    /// Blend of two constants around the borderline oscillation.
    Oscillate,
    /// A user-supplied potential.
    Prescribed,
}

/// Every setting of a run. The same fields are accepted as flags and as
/// keys of the `--config` JSON file; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Space dimension N.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Potential for linsolve: zero, borderline, hardy, shifted:EPS,
    /// window:A,B, table:FILE.json or spec:FILE.json.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Target φ for liminf: inv_r2, inv_r, borderline or power:EXPONENT,SCALE.
    #[arg(long, global = true)]
    pub phi: Option<String>,
    /// Number of oscillation stages (at most 2)
    #[arg(long, global = true)]
    pub stages: Option<usize>,
    /// Lower blend level C1
    #[arg(long, global = true)]
    pub c1: Option<f64>,
    /// Upper blend level C2
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    /// Potential for prescribed mode, same syntax as --potential.
    #[arg(long, global = true)]
    pub psi: Option<String>,
    /// Built-in verification case: exp10, hardy12, blend10 or torsion.
    #[arg(long, global = true)]
    pub case: Option<String>,
    /// potential.json written by construct, verified with λ* = 1.
    #[arg(long, global = true)]
    pub case_file: Option<PathBuf>,
    /// Innermost log-radius of the grid
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    /// Grid nodes per unit of t.
    #[arg(long, global = true)]
    pub density: Option<f64>,
    /// Relative tolerance of the shooting integrator.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Width in t of the bound-check windows
    #[arg(long, global = true)]
    pub window_width: Option<f64>,
    /// Offset in t between consecutive windows
    #[arg(long, global = true)]
    pub window_step: Option<f64>,
    /// Slack allowed below 2(N−2) in each window
    #[arg(long, global = true)]
    pub window_tol: Option<f64>,
    /// Number of random pairs for sweep.
    #[arg(long, global = true)]
    pub pairs: Option<usize>,
    /// Seed for sweep
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; falls back to EXTREMAL_OUT_DIR, then ./out.
    #[arg(long, global = true)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: &RunConfig) -> Self {
        overlay!(
            self,
            flags,
            dim,
            potential,
            mode,
            phi,
            stages,
            c1,
            c2,
            psi,
            case,
            case_file,
            t_min,
            density,
            rtol,
            window_width,
            window_step,
            window_tol,
            pairs,
            seed,
            out
        );
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("EXTREMAL_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn dim(&self) -> Result<usize, CliError> {
        let dim = self
            .dim
            .ok_or_else(|| CliError::Validation("--dim is required".into()))?;
        if dim < 3 {
            return Err(CliError::Validation(format!(
                "dimension must be >= 3, got {dim}"
            )));
        }
        Ok(dim)
    }

    pub fn validate_numbers(&self) -> Result<(), CliError> {
        let positive = [
            ("density", self.density),
            ("rtol", self.rtol),
            ("window-width", self.window_width),
            ("window-step", self.window_step),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Validation(format!(
                        "--{name} must be positive, got {v}"
                    )));
                }
            }
        }
        if let Some(tol) = self.window_tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(CliError::Validation(format!(
                    "--window-tol must be nonnegative, got {tol}"
                )));
            }
        }
        if let Some(t) = self.t_min {
            if !(t.is_finite() && t < 0.0) {
                return Err(CliError::Validation(format!(
                    "--t-min must be negative, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Digest of the resolved config and of every input file it names.
pub fn config_hash(command: &str, config: &RunConfig, inputs: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(
        serde_json::to_string(config)
            .expect("config serializes")
            .as_bytes(),
    );
    for (path, digest) in inputs {
        h.update([0]);
        h.update(path.as_bytes());
        h.update([0]);
        h.update(digest.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
