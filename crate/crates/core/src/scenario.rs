//! Declarative scene description and its conversion into path statistics.
//!
//! A scene lists the base station, scatterers and users; every user reaches
//! the base station through a subset of the scatterers (and optionally a
//! direct link). A path's direction of arrival is the unit vector from the
//! base station toward the last point of the path, and its average power
//! follows the free-space-style law `(λ/4π)²·d^(−η)`.
//!
//! Scenes are stored as TOML; see `README.md` for the field reference.

use std::f64::consts::PI;

use nalgebra::{Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ArrayState, GainPattern, UserPathStats};
use crate::error::{Error, Result};
use crate::geometry::{EulerAngles, SurfacePose};
use crate::rate::PowerConfig;
use crate::rotation::{RotationProblem, SphereMap};

/// How the length of a reflected path enters the path-loss law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLength {
    /// `d = ‖user − scatterer‖ + ‖scatterer − bs‖`.
    #[default]
    Total,
    /// `d^η` replaced by `(d₁·d₂)^η`.
    SegmentProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub position: Vector3<f64>,
    /// Transmit power, watts.
    pub power: f64,
    /// Indices into `Scene::scatterers` that serve this user.
    pub scatterers: Vec<usize>,
    #[serde(default = "default_true")]
    pub direct_blocked: bool,
}

fn default_true() -> bool {
    true
}

/// Shape of one movable surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLayout {
    pub surfaces: usize,
    /// Antenna offsets in the surface frame (normal along local +x), meters.
    pub local_offsets: Vec<Vector3<f64>>,
    /// Diameter of the disk enclosing one surface, meters.
    pub enclosing_diameter: f64,
    #[serde(default)]
    pub pattern: GainPattern,
}

/// Record of how user positions were perturbed, kept for reproducibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub seed: u64,
    /// Half-width of the uniform offset in x and y, meters.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub wavelength: f64,
    pub path_loss_exponent: f64,
    #[serde(default)]
    pub path_length: PathLength,
    /// Extra loss per reflection, dB.
    #[serde(default)]
    pub reflection_loss_db: f64,
    /// Receiver noise power, watts.
    pub noise_power: f64,
    pub bs_position: Vector3<f64>,
    /// Edge of the cubic region available to the surfaces, meters.
    pub region_edge: f64,
    pub scatterers: Vec<Vector3<f64>>,
    pub users: Vec<User>,
    pub array: SurfaceLayout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<Jitter>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if self.users.is_empty() {
            return bad("at least one user is required".into());
        }
        if !positive(self.wavelength) {
            return bad("wavelength must be positive".into());
        }
        if !positive(self.path_loss_exponent) {
            return bad("path loss exponent must be positive".into());
        }
        if !positive(self.noise_power) {
            return bad("noise power must be positive".into());
        }
        if !positive(self.region_edge) {
            return bad("region edge must be positive".into());
        }
        for (k, u) in self.users.iter().enumerate() {
            if !positive(u.power) {
                return bad(format!("user {k} has non-positive power"));
            }
            if u.scatterers.is_empty() && u.direct_blocked {
                return bad(format!("user {k} has no unblocked path"));
            }
            if let Some(s) = u.scatterers.iter().find(|&&s| s >= self.scatterers.len()) {
                return bad(format!("user {k} refers to missing scatterer {s}"));
            }
        }
        self.array_geometry()
            .validate()
            .map_err(|e| Error::InvalidScene(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scene: Scene = toml::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn array_geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            surfaces: self.array.surfaces,
            local_offsets: self.array.local_offsets.clone(),
            wavelength: self.wavelength,
            enclosing_diameter: self.array.enclosing_diameter,
            pattern: self.array.pattern,
        }
    }

    pub fn power_config(&self) -> Result<PowerConfig> {
        PowerConfig::new(
            self.users.iter().map(|u| u.power).collect(),
            self.noise_power,
        )
    }

    /// Same scene with every user transmitting `power` watts.
    pub fn with_uniform_power(&self, power: f64) -> Self {
        let mut s = self.clone();
        s.users.iter_mut().for_each(|u| u.power = power);
        s
    }

    pub fn sphere_map(&self) -> Result<SphereMap> {
        SphereMap::for_cube(self.region_edge)
    }

    pub fn rotation_problem(&self) -> Result<RotationProblem> {
        RotationProblem::new(
            build_path_stats(self)?,
            self.array_geometry(),
            self.power_config()?,
            self.sphere_map()?,
        )
    }
}

/// False for NaN as well.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn distance(a: &Vector3<f64>, b: &Vector3<f64>, what: &str) -> Result<f64> {
    let d = (a - b).norm();
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::InvalidScene(format!("{what} coincide")))
    }
}

/// `(λ/4π)²·d^(−η)`.
pub fn path_power(wavelength: f64, exponent: f64, length: f64) -> f64 {
    (wavelength / (4.0 * PI)).powi(2) * length.powf(-exponent)
}

/// Directions of arrival and average path powers of every user.
pub fn build_path_stats(scene: &Scene) -> Result<Vec<UserPathStats>> {
    scene.validate()?;
    let refl = 10f64.powf(-scene.reflection_loss_db / 10.0);
    let lam = scene.wavelength;
    let eta = scene.path_loss_exponent;
    scene
        .users
        .iter()
        .enumerate()
        .map(|(k, user)| {
            let mut doas = Vec::new();
            let mut powers = Vec::new();
            if !user.direct_blocked {
                let d = distance(
                    &user.position,
                    &scene.bs_position,
                    &format!("user {k} and base station"),
                )?;
                doas.push(Unit::new_normalize(user.position - scene.bs_position));
                powers.push(path_power(lam, eta, d));
            }
            for &s in &user.scatterers {
                let sp = &scene.scatterers[s];
                let d1 = distance(&user.position, sp, &format!("user {k} and scatterer {s}"))?;
                let d2 = distance(
                    sp,
                    &scene.bs_position,
                    &format!("scatterer {s} and base station"),
                )?;
                let gain = match scene.path_length {
                    PathLength::Total => path_power(lam, eta, d1 + d2),
                    PathLength::SegmentProduct => path_power(lam, eta, d1 * d2),
                };
                doas.push(Unit::new_normalize(sp - scene.bs_position));
                powers.push(gain * refl);
            }
            UserPathStats::new(doas, powers)
        })
        .collect()
}

/// Three fixed sectors facing azimuths 0°, 120° and 240° with zero tilt,
/// each a horizontal uniform linear array of half-wavelength spacing
/// mounted on the region boundary.
pub fn fpa_baseline(scene: &Scene, antennas_per_sector: usize) -> (ArrayGeometry, ArrayState) {
    let lam = scene.wavelength;
    let spacing = lam / 2.0;
    let mid = (antennas_per_sector as f64 - 1.0) / 2.0;
    let offsets: Vec<Vector3<f64>> = (0..antennas_per_sector)
        .map(|i| Vector3::new(0.0, (i as f64 - mid) * spacing, 0.0))
        .collect();
    let reach = offsets.iter().map(|o| o.norm()).fold(0.0, f64::max);
    let geometry = ArrayGeometry {
        surfaces: 3,
        local_offsets: offsets,
        wavelength: lam,
        enclosing_diameter: (2.0 * reach).max(spacing),
        pattern: scene.array.pattern,
    };
    let radius = scene.region_edge / 2.0;
    let poses = (0..3)
        .map(|s| {
            let az = 2.0 * PI * s as f64 / 3.0;
            SurfacePose::new(
                scene.bs_position + radius * Vector3::new(az.cos(), az.sin(), 0.0),
                EulerAngles::new(0.0, 0.0, az),
            )
        })
        .collect();
    (geometry, ArrayState::new(poses))
}

pub const DEFAULT_JITTER: Jitter = Jitter {
    seed: 7,
    amplitude: 2.0,
};

/// The five-user, three-scatterer reference scene with the default jitter.
pub fn reference_scene() -> Scene {
    reference_scene_with_jitter(DEFAULT_JITTER)
}

/// Reference scene; the two user pairs are spread around their nominal
/// points by a uniform offset in x and y.
pub fn reference_scene_with_jitter(jitter: Jitter) -> Scene {
    let lam = 0.125;
    let a = lam / 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(jitter.seed);
    let mut around = |x: f64, y: f64| {
        let w = jitter.amplitude;
        let (dx, dy) = if w > 0.0 {
            (rng.random_range(-w..=w), rng.random_range(-w..=w))
        } else {
            (0.0, 0.0)
        };
        Vector3::new(x + dx, y + dy, 0.0)
    };
    let positions = [
        around(-40.0, 50.0),
        around(-40.0, 50.0),
        Vector3::new(30.0, 80.0, 0.0),
        around(-10.0, -20.0),
        around(-10.0, -20.0),
    ];
    Scene {
        wavelength: lam,
        path_loss_exponent: 3.0,
        path_length: PathLength::Total,
        reflection_loss_db: 0.0,
        noise_power: 1e-12,
        bs_position: Vector3::zeros(),
        region_edge: 2f64.sqrt(),
        scatterers: vec![
            Vector3::new(-40.0, 30.0, 10.0),
            Vector3::new(20.0, 0.0, 10.0),
            Vector3::new(0.0, -10.0, 0.0),
        ],
        users: positions
            .iter()
            .map(|p| User {
                position: *p,
                power: 0.1,
                scatterers: vec![0, 1, 2],
                direct_blocked: true,
            })
            .collect(),
        array: SurfaceLayout {
            surfaces: 8,
            local_offsets: vec![
                Vector3::new(0.0, a, a),
                Vector3::new(0.0, a, -a),
                Vector3::new(0.0, -a, a),
                Vector3::new(0.0, -a, -a),
            ],
            // circumscribed circle of a √2·λ square
            enclosing_diameter: 2.0 * lam,
            pattern: GainPattern::default(),
        },
        jitter: Some(jitter),
    }
}
