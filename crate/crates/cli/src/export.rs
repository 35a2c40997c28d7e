//! Result files: long-format CSV, geometry JSON, and atomic writes.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sixdma::channel::ArrayState;
use sixdma::geometry::{antenna_positions, rotation_matrix, Disk3D, EulerAngles};
use sixdma::placement::BoundingBox;

use crate::error::Failure;
use crate::pipeline::optimized_state;
use crate::record::{PowerPoint, RunRecord};

pub const CSV_HEADER: [&str; 9] = [
    "power_dbm",
    "scheme",
    "sum_log_rate",
    "mc_sum_log_rate",
    "user",
    "rate_lower_bound",
    "mc_rate",
    "mc_stderr",
    "mc_upper_bound",
];

pub const RIM_POINTS: usize = 64;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One line per (power point, scheme, user). Monte Carlo columns are empty
/// when sampling was disabled.
pub fn results_csv(rows: &[PowerPoint]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        let r = &row.report;
        for (k, lb) in r.lower_bounds.iter().enumerate() {
            let mc = r.monte_carlo.as_ref().map(|m| m[k]);
            w.write_record([
                row.power_dbm.to_string(),
                row.scheme.label().to_string(),
                r.sum_log_rate.to_string(),
                opt(r.mc_sum_log_rate()),
                k.to_string(),
                lb.to_string(),
                opt(mc.map(|m| m.average_rate.mean)),
                opt(mc.map(|m| m.average_rate.stderr)),
                opt(mc.map(|m| m.upper_bound)),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceExport {
    pub index: usize,
    pub center: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub rotation: EulerAngles,
    /// Closed-form samples of the enclosing circle, first point not repeated.
    pub rim: Vec<Vector3<f64>>,
    pub antennas: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vector3<f64>,
    pub edge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryExport {
    pub cer_radius: f64,
    pub bounding_cube: Cube,
    pub surfaces: Vec<SurfaceExport>,
}

pub fn geometry_export(record: &RunRecord) -> GeometryExport {
    let geom = record.scene.array_geometry();
    let radius = geom.cer_radius();
    let state: ArrayState = optimized_state(record);
    let mut disks = Vec::with_capacity(state.len());
    let surfaces = state
        .poses
        .iter()
        .enumerate()
        .map(|(index, pose)| {
            let r = rotation_matrix(&pose.rotation);
            let (e1, e2) = (r.column(1).into_owned(), r.column(2).into_owned());
            let disk = Disk3D::new(pose.position, pose.normal(), radius);
            disks.push(disk);
            SurfaceExport {
                index,
                center: pose.position,
                normal: pose.normal().into_inner(),
                rotation: pose.rotation,
                rim: (0..RIM_POINTS)
                    .map(|i| {
                        disk.rim_point(
                            &e1,
                            &e2,
                            std::f64::consts::TAU * i as f64 / RIM_POINTS as f64,
                        )
                    })
                    .collect(),
                antennas: antenna_positions(pose, &geom.local_offsets),
            }
        })
        .collect();
    let bbox = BoundingBox::of_disks(&disks);
    GeometryExport {
        cer_radius: radius,
        bounding_cube: Cube {
            center: bbox.center(),
            edge: bbox.cube_edge(),
        },
        surfaces,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load_record(path: &Path) -> Result<RunRecord, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
