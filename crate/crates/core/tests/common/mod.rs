//! Test-side oracles written from the formulas, independent of the library
//! code paths, plus random instance generators.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, DMatrix, Matrix3, Unit, Vector3};
use rand::Rng;
use sixdma::channel::{ArrayGeometry, ArrayState, GainPattern, UserPathStats};
use sixdma::geometry::{EulerAngles, SurfacePose};
use sixdma::rate::PowerConfig;
use sixdma::scenario::{PathLength, Scene, SurfaceLayout, User};

pub type C64 = Complex<f64>;

pub fn rx(a: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos())
}

pub fn ry(b: f64) -> Matrix3<f64> {
    Matrix3::new(b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos())
}

pub fn rz(g: f64) -> Matrix3<f64> {
    Matrix3::new(g.cos(), -g.sin(), 0.0, g.sin(), g.cos(), 0.0, 0.0, 0.0, 1.0)
}

/// Yaw-pitch-roll product of elementary rotations.
pub fn rot(u: &EulerAngles) -> Matrix3<f64> {
    rz(u.gamma) * ry(u.beta) * rx(u.alpha)
}

/// 3GPP sector element, evaluated in degrees from spherical angles.
pub fn gain_oracle(r: &Matrix3<f64>, f: &Vector3<f64>) -> f64 {
    let l = r.transpose() * f;
    let theta = l.z.acos() * 180.0 / PI;
    let phi = l.y.atan2(l.x) * 180.0 / PI;
    let av = -f64::min(12.0 * ((theta - 90.0) / 65.0).powi(2), 30.0);
    let ah = -f64::min(12.0 * (phi / 65.0).powi(2), 30.0);
    let db = 8.0 - f64::min(-(av + ah), 30.0);
    10f64.powf(db / 10.0)
}

/// `Σ_l α²_l·a_l·a_lᴴ` entry by entry.
pub fn covariance_oracle(
    poses: &[SurfacePose],
    offsets: &[Vector3<f64>],
    wavelength: f64,
    doas: &[Vector3<f64>],
    powers: &[f64],
) -> DMatrix<C64> {
    let n = poses.len() * offsets.len();
    let mut sigma = DMatrix::zeros(n, n);
    for (f, p) in doas.iter().zip(powers) {
        let mut a = Vec::with_capacity(n);
        for pose in poses {
            let r = rot(&pose.rotation);
            let g = gain_oracle(&r, f).max(1e-30).sqrt();
            for off in offsets {
                let pos = pose.position + r * off;
                let phase = -TAU / wavelength * f.dot(&pos);
                a.push(C64::new(g * phase.cos(), g * phase.sin()));
            }
        }
        for i in 0..n {
            for j in 0..n {
                sigma[(i, j)] += a[i] * a[j].conj() * *p;
            }
        }
    }
    sigma
}

pub fn rel_frobenius(a: &DMatrix<C64>, reference: &DMatrix<C64>) -> f64 {
    (a - reference).norm() / reference.norm()
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Unit<Vector3<f64>> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return Unit::new_normalize(v);
        }
    }
}

pub fn random_angles<R: Rng>(rng: &mut R) -> EulerAngles {
    EulerAngles::new(
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
    )
}

/// `n` antennas on a two-column grid in the surface plane.
pub fn grid_offsets(n: usize, spacing: f64) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|i| {
            let (r, c) = ((i / 2) as f64, (i % 2) as f64);
            Vector3::new(0.0, (c - 0.5) * spacing, (r - 0.5) * spacing)
        })
        .collect()
}

pub fn geometry(surfaces: usize, antennas: usize) -> ArrayGeometry {
    let lam = 0.125;
    let offsets = grid_offsets(antennas, lam / 2.0);
    ArrayGeometry {
        surfaces,
        local_offsets: offsets,
        wavelength: lam,
        enclosing_diameter: 2.0 * lam,
        pattern: GainPattern::default(),
    }
}

/// One multiuser channel instance with random geometry and powers.
pub struct Instance {
    pub geometry: ArrayGeometry,
    pub state: ArrayState,
    pub users: Vec<UserPathStats>,
    pub power: PowerConfig,
}

pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_b: usize,
    max_n: usize,
    max_k: usize,
    max_l: usize,
) -> Instance {
    let b = rng.random_range(1..=max_b);
    let n = rng.random_range(1..=max_n);
    let k = rng.random_range(1..=max_k);
    let geometry = geometry(b, n);
    let state = ArrayState::new(
        (0..b)
            .map(|_| {
                let u = random_angles(rng);
                SurfacePose::new(0.7 * (rot(&u) * Vector3::x()), u)
            })
            .collect(),
    );
    let users = (0..k)
        .map(|_| {
            let l = rng.random_range(1..=max_l);
            UserPathStats::new(
                (0..l).map(|_| random_unit(rng)).collect(),
                (0..l)
                    .map(|_| 10f64.powf(rng.random_range(-2.0..0.0)))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let power = PowerConfig::new(
        (0..k)
            .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
            .collect(),
        10f64.powf(rng.random_range(-2.0..0.0)),
    )
    .unwrap();
    Instance {
        geometry,
        state,
        users,
        power,
    }
}

/// Scene with random scatterers and users around a base station at the
/// origin; every user sees at least one scatterer.
pub fn random_scene<R: Rng>(rng: &mut R, surfaces: usize) -> Scene {
    let lam = 0.125;
    let s = rng.random_range(1..=4);
    let scatterers: Vec<Vector3<f64>> = (0..s)
        .map(|_| {
            Vector3::new(
                rng.random_range(-60.0..60.0),
                rng.random_range(-60.0..60.0),
                rng.random_range(-5.0..15.0),
            )
        })
        .collect();
    let users = (0..rng.random_range(1..=4))
        .map(|_| {
            let mut serving: Vec<usize> = (0..s).filter(|_| rng.random_bool(0.6)).collect();
            if serving.is_empty() {
                serving.push(rng.random_range(0..s));
            }
            User {
                position: Vector3::new(
                    rng.random_range(-90.0..90.0),
                    rng.random_range(-90.0..90.0),
                    0.0,
                ),
                power: 10f64.powf(rng.random_range(-2.0..0.0)),
                scatterers: serving,
                direct_blocked: rng.random_bool(0.7),
            }
        })
        .collect();
    Scene {
        wavelength: lam,
        path_loss_exponent: 3.0,
        path_length: PathLength::Total,
        reflection_loss_db: 0.0,
        noise_power: 1e-12,
        bs_position: Vector3::zeros(),
        region_edge: 2f64.sqrt(),
        scatterers,
        users,
        array: SurfaceLayout {
            surfaces,
            local_offsets: grid_offsets(4, lam / 2.0),
            enclosing_diameter: 2.0 * lam,
            pattern: GainPattern::default(),
        },
        jitter: None,
    }
}

/// Rotations drawn from a few base orientations with tiny perturbations,
/// the way near-duplicate optimizer outputs look.
pub fn clustered_angles<R: Rng>(rng: &mut R, count: usize) -> Vec<EulerAngles> {
    let bases: Vec<EulerAngles> = (0..rng.random_range(1..=3))
        .map(|_| random_angles(rng))
        .collect();
    (0..count)
        .map(|_| {
            let b = bases[rng.random_range(0..bases.len())];
            let e = 10f64.powf(rng.random_range(-14.0..-3.0));
            EulerAngles::new(
                b.alpha + e * rng.random_range(-1.0..1.0),
                b.beta + e * rng.random_range(-1.0..1.0),
                b.gamma + e * rng.random_range(-1.0..1.0),
            )
        })
        .collect()
}

/// Exact penetration of a disk through a plane, `nᵀ(c − q) + r·‖n × m‖`.
/// The cross product keeps `sin θ` accurate for nearly parallel normals,
/// where `sqrt(1 − cos²θ)` does not.
pub fn penetration_oracle(
    plane_n: &Vector3<f64>,
    plane_q: &Vector3<f64>,
    disk_c: &Vector3<f64>,
    disk_n: &Vector3<f64>,
    r: f64,
) -> f64 {
    plane_n.dot(&(disk_c - plane_q)) + r * plane_n.cross(disk_n).norm()
}

/// Worst pairwise penetration over all ordered surface pairs.
pub fn worst_penetration(positions: &[Vector3<f64>], angles: &[EulerAngles], r: f64) -> f64 {
    let normals: Vec<Vector3<f64>> = angles.iter().map(|u| rot(u) * Vector3::x()).collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..positions.len() {
        for j in 0..positions.len() {
            if i != j {
                worst = worst.max(penetration_oracle(
                    &normals[i],
                    &positions[i],
                    &positions[j],
                    &normals[j],
                    r,
                ));
            }
        }
    }
    worst
}
