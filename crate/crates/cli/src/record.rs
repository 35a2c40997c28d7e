use serde::{Deserialize, Serialize};
use sixdma::placement::PlacementResult;
use sixdma::rate::RateReport;
use sixdma::rotation::RotationDesign;
use sixdma::scenario::Scene;

use crate::config::RunConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Rotations and positions from the optimizer.
    #[serde(rename = "6dma")]
    Optimized,
    /// Three fixed sectors.
    #[serde(rename = "fpa")]
    Fpa,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Optimized => "6dma",
            Scheme::Fpa => "fpa",
        }
    }
}

/// Rates of one scheme with every user transmitting `power_dbm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub power_dbm: f64,
    pub scheme: Scheme,
    pub report: RateReport,
}

/// Wall-clock seconds per stage. The only nondeterministic part of a record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub design_s: f64,
    pub placement_s: f64,
    pub evaluation_s: f64,
}

/// Inputs and outputs of one optimization run. Replaying `scene` with
/// `config` reproduces everything except `timings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: u32,
    pub config: RunConfig,
    pub scene: Scene,
    pub design: RotationDesign,
    pub placement: PlacementResult,
    pub rows: Vec<PowerPoint>,
    pub timings: Timings,
}

impl RunRecord {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Edge of the cube enclosing all placed surfaces, meters.
    pub fn cube_edge(&self) -> f64 {
        self.placement.bounding_cube_edge
    }
}
