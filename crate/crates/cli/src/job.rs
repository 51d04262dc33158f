//! JSON job configs: the file-based way to drive any subcommand. Unknown
//! keys are rejected so a typo'd config fails loudly instead of silently
//! running defaults, and the effective (merged) config is echoed into every
//! report so a run can be reproduced from its own output.

use confcurv::seed::{PointMove, SeedConfig};
use confcurv::solver::SolverConfig;
use confcurv::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobConfig {
    /// Must match the invoked subcommand when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,

    // cones / verify
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    /// Coarse/fine sizes for refinement studies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study_sizes: Option<Vec<usize>>,

    // equation parameters
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,

    // background
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warped_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_in: Option<PathBuf>,

    // seed pipeline
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moves: Option<Vec<PointMove>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_cfg: Option<SeedConfig>,

    // solve
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<JobConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn check_command(&self, invoked: &str) -> Result<()> {
        if let Some(cmd) = &self.command {
            if cmd != invoked {
                return Err(Error::Config(format!(
                    "config is for command '{cmd}' but '{invoked}' was invoked"
                )));
            }
        }
        Ok(())
    }
}

/// Parse "16,16,16" (or a single size, replicated to three axes).
pub fn parse_grid_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let mut out = Vec::with_capacity(parts.len());
    for p in &parts {
        out.push(
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad grid size '{p}': {e}"))?,
        );
    }
    if out.len() == 1 {
        let v = out[0];
        out = vec![v; 3];
    }
    Ok(out)
}

/// Parse "1.0,2.0,3.0".
pub fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad value '{p}': {e}"))
        })
        .collect()
}
