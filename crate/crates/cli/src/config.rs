//! Run settings: defaults, an optional TOML config file, and flag overrides.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sixdma::rotation::SolverParams;

use crate::error::Failure;

/// Everything besides the scene that determines a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub kappa_max: usize,
    pub mbar: usize,
    pub eps: f64,
    /// Evaluation points, dBm, applied to every user.
    pub powers_dbm: Vec<f64>,
    /// Monte Carlo realizations per evaluation point; 0 disables sampling.
    pub mc_samples: usize,
    pub fpa_antennas: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverParams::default();
        Self {
            seed: 0,
            kappa_max: solver.max_iterations,
            mbar: solver.candidates,
            eps: solver.fd_step,
            powers_dbm: (0..=6).map(|i| 5.0 * i as f64).collect(),
            mc_samples: 1000,
            fpa_antennas: 11,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn solver(&self) -> SolverParams {
        SolverParams {
            candidates: self.mbar,
            max_iterations: self.kappa_max,
            fd_step: self.eps,
            ..SolverParams::default()
        }
    }
}

/// Independent random streams derived from the master seed. Rotation
/// design is deterministic and draws from none of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    MonteCarlo = 1,
    Jitter = 2,
}

pub fn substream(seed: u64, which: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Comma-separated dBm values; the empty string is the empty list.
pub fn parse_powers(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| format!("not a number: {t:?}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("not finite: {t:?}"))
            }
        })
        .collect()
}
