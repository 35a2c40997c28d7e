//! Library side of the `sixdma` command-line tool.
//!
//! Each `cmd_*` function is one subcommand minus argument parsing, so the
//! whole tool can be driven from tests.

pub mod config;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod record;

use std::path::Path;

use sixdma::placement::verify;
use sixdma::scenario::Scene;
use sixdma::Execution;

pub use config::RunConfig;
pub use error::Failure;
pub use record::RunRecord;

use export::{geometry_export, results_csv, to_json, write_atomic};

pub const RUN_FILE: &str = "run.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const GEOMETRY_FILE: &str = "geometry.json";

/// Full pipeline. Always writes `run.json`; `results.csv` and
/// `geometry.json` only when the placement is feasible.
pub fn cmd_optimize(
    scene: &Scene,
    cfg: &RunConfig,
    out: &Path,
    exec: Execution,
) -> Result<RunRecord, Failure> {
    let record = pipeline::optimize(scene, cfg, exec)?;
    write_atomic(out, RUN_FILE, &to_json(&record)?)?;
    if !record.placement.feasible {
        return Err(Failure::Infeasible(record.placement.violations.clone()));
    }
    write_atomic(out, RESULTS_FILE, &results_csv(&record.rows)?)?;
    write_atomic(out, GEOMETRY_FILE, &to_json(&geometry_export(&record))?)?;
    Ok(record)
}

/// Re-evaluates an optimized configuration at new power points and writes
/// `results.csv`.
pub fn cmd_sweep(
    record: &RunRecord,
    powers_dbm: &[f64],
    mc_samples: usize,
    out: &Path,
    exec: Execution,
) -> Result<String, Failure> {
    if mc_samples == 1 {
        return Err(Failure::Config("mc_samples must be 0 or at least 2".into()));
    }
    let rows = pipeline::evaluate(record, powers_dbm, mc_samples, exec)?;
    let csv = results_csv(&rows)?;
    write_atomic(out, RESULTS_FILE, &csv)?;
    Ok(csv)
}

pub fn cmd_export_geometry(record: &RunRecord, out: &Path) -> Result<(), Failure> {
    write_atomic(out, GEOMETRY_FILE, &to_json(&geometry_export(record))?)
}

/// Rechecks the stored placement against the stored rotations.
pub fn cmd_verify(record: &RunRecord, tol: f64) -> Result<(), Failure> {
    let geom = record.scene.array_geometry();
    let (ok, violations) = verify(
        &record.placement.positions,
        &record.design.optimized,
        &geom,
        tol,
    );
    if ok {
        Ok(())
    } else {
        Err(Failure::Infeasible(violations))
    }
}
