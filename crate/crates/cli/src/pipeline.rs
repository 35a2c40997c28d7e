//! Scene loading, optimization and evaluation.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use sixdma::channel::{covariance, ArrayGeometry, ArrayState, ChannelCovariance};
use sixdma::placement::{place_surfaces, PlacementOptions};
use sixdma::rate::{dbm_to_watts, MonteCarlo, PowerConfig, RateReport};
use sixdma::rotation::design_rotations;
use sixdma::scenario::{
    build_path_stats, fpa_baseline, reference_scene_with_jitter, Jitter, Scene, DEFAULT_JITTER,
};
use sixdma::Execution;

use crate::config::{substream, RunConfig, Substream};
use crate::error::Failure;
use crate::record::{PowerPoint, RunRecord, Scheme, Timings, FORMAT_VERSION};

pub fn load_scene(path: &Path) -> Result<Scene, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::InvalidScene(format!("{}: {e}", path.display())))?;
    Scene::from_toml(&text).map_err(|e| Failure::InvalidScene(format!("{}: {e}", path.display())))
}

/// Reference scene with user offsets drawn from the jitter substream.
pub fn default_scene(seed: u64) -> Scene {
    reference_scene_with_jitter(Jitter {
        seed: substream(seed, Substream::Jitter).random(),
        amplitude: DEFAULT_JITTER.amplitude,
    })
}

fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.solver().validate()?;
    if cfg.mc_samples == 1 {
        return Err(Failure::Config("mc_samples must be 0 or at least 2".into()));
    }
    if cfg.fpa_antennas == 0 {
        return Err(Failure::Config("fpa_antennas must be positive".into()));
    }
    Ok(())
}

/// Designs rotations at the scene's own user powers, places the surfaces
/// and evaluates both schemes at `cfg.powers_dbm`. Infeasibility is
/// reported through the record, not as an error.
pub fn optimize(scene: &Scene, cfg: &RunConfig, exec: Execution) -> Result<RunRecord, Failure> {
    validate(cfg)?;
    scene
        .validate()
        .map_err(|e| Failure::InvalidScene(e.to_string()))?;
    let problem = scene.rotation_problem()?.with_execution(exec);

    let t = Instant::now();
    let design = design_rotations(&problem, &cfg.solver())?;
    let design_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let placement = place_surfaces(
        &design.optimized,
        &problem.geometry,
        &PlacementOptions::default(),
    );
    let placement_s = t.elapsed().as_secs_f64();

    let mut record = RunRecord {
        format: FORMAT_VERSION,
        config: cfg.clone(),
        scene: scene.clone(),
        design,
        placement,
        rows: Vec::new(),
        timings: Timings {
            design_s,
            placement_s,
            evaluation_s: 0.0,
        },
    };
    let t = Instant::now();
    record.rows = evaluate(&record, &cfg.powers_dbm, cfg.mc_samples, exec)?;
    record.timings.evaluation_s = t.elapsed().as_secs_f64();
    Ok(record)
}

/// Placed array of a record.
pub fn optimized_state(record: &RunRecord) -> ArrayState {
    ArrayState::new(record.placement.poses(&record.design.optimized))
}

fn covariances(
    scene: &Scene,
    state: &ArrayState,
    geom: &ArrayGeometry,
) -> Result<Vec<ChannelCovariance>, Failure> {
    Ok(build_path_stats(scene)?
        .iter()
        .map(|s| covariance(state, s, geom))
        .collect())
}

/// Rates of the optimized array and of the sector baseline at each power.
/// Sampling draws from the record's Monte Carlo substream in row order.
pub fn evaluate(
    record: &RunRecord,
    powers_dbm: &[f64],
    mc_samples: usize,
    exec: Execution,
) -> Result<Vec<PowerPoint>, Failure> {
    let scene = &record.scene;
    let geom = scene.array_geometry();
    let (fpa_geom, fpa_state) = fpa_baseline(scene, record.config.fpa_antennas);
    let schemes = [
        (
            Scheme::Optimized,
            covariances(scene, &optimized_state(record), &geom)?,
        ),
        (Scheme::Fpa, covariances(scene, &fpa_state, &fpa_geom)?),
    ];
    let mc = (mc_samples > 0).then(|| MonteCarlo::new(mc_samples).with_execution(exec));
    let mut rng = substream(record.seed(), Substream::MonteCarlo);
    let mut rows = Vec::with_capacity(2 * powers_dbm.len());
    for &p in powers_dbm {
        let pw = PowerConfig::uniform(scene.users.len(), dbm_to_watts(p), scene.noise_power)?;
        for (scheme, covs) in &schemes {
            rows.push(PowerPoint {
                power_dbm: p,
                scheme: *scheme,
                report: RateReport::evaluate(covs, &pw, mc.as_ref(), &mut rng)?,
            });
        }
    }
    Ok(rows)
}
