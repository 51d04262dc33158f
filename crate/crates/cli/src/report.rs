//! Run reports and deferred output writing.
//!
//! Every run produces one JSON report that echoes the effective config, the
//! tool version, and wall-clock timings alongside the results, so a report is
//! enough to reproduce the run bit-for-bit. Output files are buffered in
//! memory and flushed only after the computation finishes: a run that dies
//! with a numeric or schema error leaves no partial artifacts behind.

use crate::job::JobConfig;
use confcurv::field::{ScalarField, SymTensorField};
use confcurv::{nfld, Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Effective (merged) configuration: CLI flags override config-file
    /// values, which override defaults.
    pub config: JobConfig,
    pub deterministic: bool,
    pub rng_seed: u64,
    pub wall_ms: u128,
    pub status: &'static str,
    pub result: serde_json::Value,
}

/// One buffered output artifact. Nothing touches the filesystem until
/// [`flush`] runs, after the computation has already succeeded or produced a
/// reportable check violation.
pub enum Artifact {
    Json(String, serde_json::Value),
    Csv(String, String),
    Scalar(String, ScalarField),
    Sym(String, SymTensorField),
}

pub fn flush(out_dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let path = match artifact {
            Artifact::Json(name, value) => {
                let path = out_dir.join(name);
                let text = serde_json::to_string_pretty(value)
                    .map_err(|e| Error::Format(format!("report serialization: {e}")))?;
                std::fs::write(&path, text + "\n")?;
                path
            }
            Artifact::Csv(name, text) => {
                let path = out_dir.join(name);
                std::fs::write(&path, text)?;
                path
            }
            Artifact::Scalar(name, field) => {
                let path = out_dir.join(name);
                nfld::write_scalar(&path, field)?;
                path
            }
            Artifact::Sym(name, field) => {
                let path = out_dir.join(name);
                nfld::write_sym(&path, field)?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}

/// Render rows of (t, iter, residual, margin, symbol_min, krylov, step).
pub fn newton_trace_csv(records: &[confcurv::solver::NewtonRecord]) -> String {
    let mut csv = String::from("t,newton_iter,residual,min_margin,symbol_min,krylov_iterations,step_length\n");
    for r in records {
        csv.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{},{}\n",
            r.t, r.iter, r.residual, r.min_margin, r.symbol_min, r.krylov_iterations, r.step_length
        ));
    }
    csv
}

pub fn homotopy_trace_csv(records: &[confcurv::solver::HomotopyRecord]) -> String {
    let mut csv = String::from("t,newton_iterations,final_residual,min_margin\n");
    for r in records {
        csv.push_str(&format!(
            "{},{},{:.16e},{:.16e}\n",
            r.t, r.newton_iterations, r.final_residual, r.min_margin
        ));
    }
    csv
}
