//! Rotation algebra, direction lattices and the disk/halfspace primitives
//! shared by the channel model and the placement solver.
//!
//! Euler angles follow the convention `R(u) = R_z(γ)·R_y(β)·R_x(α)`, i.e.
//! the surface is rolled about x first, then pitched about y, then yawed
//! about z, all about the fixed global axes. A surface's local normal is
//! the local `+x` axis, so its antennas live in the local y–z plane.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type UnitVector3 = Unit<Vector3<f64>>;

/// Surface normal in the surface's own frame.
pub fn local_normal() -> UnitVector3 {
    Vector3::x_axis()
}

/// Rotation of a surface as (roll about x, pitch about y, yaw about z).
///
/// Components are kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly TAU
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl EulerAngles {
    /// Panics on non-finite input.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        assert!(
            alpha.is_finite() && beta.is_finite() && gamma.is_finite(),
            "Euler angles must be finite"
        );
        Self {
            alpha: wrap_angle(alpha),
            beta: wrap_angle(beta),
            gamma: wrap_angle(gamma),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// Inverse of [`rotation_matrix`] for a proper rotation. At gimbal lock
    /// (`cos β = 0`) roll is set to zero and yaw absorbs the rotation.
    pub fn from_matrix(r: &Matrix3<f64>) -> Self {
        let sb = (-r[(2, 0)]).clamp(-1.0, 1.0);
        let beta = sb.asin();
        let cb = (r[(2, 1)].powi(2) + r[(2, 2)].powi(2)).sqrt();
        if cb > 1e-12 {
            let alpha = r[(2, 1)].atan2(r[(2, 2)]);
            let gamma = r[(1, 0)].atan2(r[(0, 0)]);
            Self::new(alpha, beta, gamma)
        } else {
            let gamma = (-r[(0, 1)]).atan2(r[(1, 1)]);
            Self::new(0.0, beta, gamma)
        }
    }
}

/// `R_z(γ)·R_y(β)·R_x(α)`.
pub fn rotation_matrix(u: &EulerAngles) -> Matrix3<f64> {
    let (sa, ca) = u.alpha.sin_cos();
    let (sb, cb) = u.beta.sin_cos();
    let (sg, cg) = u.gamma.sin_cos();
    Matrix3::new(
        cg * cb,
        cg * sb * sa - sg * ca,
        cg * sb * ca + sg * sa,
        sg * cb,
        sg * sb * sa + cg * ca,
        sg * sb * ca - cg * sa,
        -sb,
        cb * sa,
        cb * ca,
    )
}

/// Global normal `R(u)·(1,0,0)`, i.e. the first column of the rotation.
pub fn surface_normal(u: &EulerAngles) -> UnitVector3 {
    let r = rotation_matrix(u);
    Unit::new_unchecked(r.column(0).into_owned())
}

/// Zero-roll rotation whose normal points along `d`.
///
/// With `α = 0` the normal is `(cos γ cos β, sin γ cos β, −sin β)`, so
/// `β = −asin(d_z)` and `γ = atan2(d_y, d_x)`.
pub fn rotation_facing(d: &UnitVector3) -> EulerAngles {
    let beta = -(d.z.clamp(-1.0, 1.0)).asin();
    let gamma = d.y.atan2(d.x);
    EulerAngles::new(0.0, beta, gamma)
}

/// Golden-angle spiral of `n` near-uniform unit directions.
pub fn fibonacci_directions(n: usize) -> Vec<UnitVector3> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let theta = golden_angle * i as f64;
            Unit::new_normalize(Vector3::new(r * theta.cos(), r * theta.sin(), z))
        })
        .collect()
}

/// Candidate rotations whose normals form a Fibonacci lattice, zero roll.
pub fn fibonacci_rotations(count: usize) -> Result<Vec<EulerAngles>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "candidate count must be at least 1".into(),
        ));
    }
    Ok(fibonacci_directions(count)
        .iter()
        .map(rotation_facing)
        .collect())
}

/// Center and rotation of one surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePose {
    pub position: Vector3<f64>,
    pub rotation: EulerAngles,
}

impl SurfacePose {
    pub fn new(position: Vector3<f64>, rotation: EulerAngles) -> Self {
        Self { position, rotation }
    }

    pub fn normal(&self) -> UnitVector3 {
        surface_normal(&self.rotation)
    }
}

/// `r_n = q + R(u)·r̄_n` for every local offset.
pub fn antenna_positions(pose: &SurfacePose, local_offsets: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let r = rotation_matrix(&pose.rotation);
    local_offsets
        .iter()
        .map(|off| pose.position + r * off)
        .collect()
}

/// `{x | nᵀ(x − anchor) ≤ 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: UnitVector3,
    pub anchor: Vector3<f64>,
}

impl Halfspace {
    pub fn new(normal: UnitVector3, anchor: Vector3<f64>) -> Self {
        Self { normal, anchor }
    }

    /// Halfspace behind a surface's plane.
    pub fn behind(pose: &SurfacePose) -> Self {
        Self::new(pose.normal(), pose.position)
    }

    pub fn offset(&self) -> f64 {
        self.normal.dot(&self.anchor)
    }
}

/// Flat disk in 3D; used as the circular extended region of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk3D {
    pub center: Vector3<f64>,
    pub normal: UnitVector3,
    pub radius: f64,
}

impl Disk3D {
    pub fn new(center: Vector3<f64>, normal: UnitVector3, radius: f64) -> Self {
        assert!(radius > 0.0, "disk radius must be positive");
        Self {
            center,
            normal,
            radius,
        }
    }

    /// Point on the rim at angle `t` measured in the given in-plane basis.
    pub fn rim_point(&self, e1: &Vector3<f64>, e2: &Vector3<f64>, t: f64) -> Vector3<f64> {
        self.center + self.radius * (t.cos() * e1 + t.sin() * e2)
    }
}

/// Maximum of a linear functional over a disk and a maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub value: f64,
    pub point: Vector3<f64>,
}

/// Below this in-plane component length a direction counts as parallel to
/// the disk normal.
pub const PARALLEL_TOL: f64 = 1e-12;

/// `max_{x ∈ disk} dirᵀx` in closed form. When `dir` is parallel to the disk
/// normal every point is a maximizer and the center is returned.
pub fn disk_support(disk: &Disk3D, direction: &UnitVector3) -> Support {
    let d = direction.as_ref();
    let base = d.dot(&disk.center);
    match in_plane_unit(d, &disk.normal) {
        Some(u) => Support {
            value: base + disk.radius * (d - disk.normal.as_ref() * disk.normal.dot(d)).norm(),
            point: disk.center + u * disk.radius,
        },
        None => Support {
            value: base,
            point: disk.center,
        },
    }
}

/// Signed amount by which the disk sticks out of the halfspace; `≤ 0` means
/// contained.
pub fn penetration_depth(h: &Halfspace, disk: &Disk3D) -> f64 {
    disk_support(disk, &h.normal).value - h.offset()
}

pub fn halfspace_contains_disk(h: &Halfspace, disk: &Disk3D, tol: f64) -> bool {
    penetration_depth(h, disk) <= tol
}

/// Unit in-plane projection of `v` onto the plane with normal `n`, or `None`
/// when `v` is (anti)parallel to `n`.
pub fn in_plane_unit(v: &Vector3<f64>, n: &UnitVector3) -> Option<Vector3<f64>> {
    let n = n.as_ref();
    let p = v - n * n.dot(v);
    let len = p.norm();
    if len <= PARALLEL_TOL {
        return None;
    }
    // second pass: for nearly parallel v the first leaves an O(eps/len) normal component
    let p = p / len;
    Some((p - n * n.dot(&p)).normalize())
}

/// Orthonormal pair spanning the plane orthogonal to `n`.
pub fn plane_basis(n: &UnitVector3) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}
