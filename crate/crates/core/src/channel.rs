//! Statistical channel description of a multi-surface array.
//!
//! A user's channel is a CSCG mixture of its propagation paths: path `l`
//! arrives from direction `f_l` with average power `α²_l`, and every surface
//! sees it through its own directional gain and steering phases. Stacking
//! the gain-weighted steering vectors of all paths column-wise gives the
//! `BN × L` factor `Ã`, and the covariance is `Ã·D·Ãᴴ` with
//! `D = diag(α²)`.
//!
//! Gains are applied per column with that column's own direction of
//! arrival.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{antenna_positions, rotation_matrix, EulerAngles, SurfacePose, UnitVector3};

/// Linear gains never drop below this floor so that log-domain diagnostics
/// stay finite.
pub const GAIN_FLOOR: f64 = 1e-30;

/// Directions of arrival and average powers of one user's paths.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPathStats {
    pub doas: Vec<UnitVector3>,
    pub path_powers: Vec<f64>,
}

impl UserPathStats {
    pub fn new(doas: Vec<UnitVector3>, path_powers: Vec<f64>) -> Result<Self> {
        if doas.is_empty() {
            return Err(Error::InvalidArgument(
                "a user needs at least one path".into(),
            ));
        }
        if doas.len() != path_powers.len() {
            return Err(Error::DimensionMismatch {
                expected: doas.len(),
                found: path_powers.len(),
            });
        }
        if path_powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument(
                "path powers must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { doas, path_powers })
    }

    pub fn num_paths(&self) -> usize {
        self.doas.len()
    }
}

/// Element radiation pattern in the sector-antenna form of 3GPP TR 38.901.
///
/// In dB: `A_V = −min(12((θ−90°)/θ₃dB)², SLA_V)`,
/// `A_H = −min(12(φ/φ₃dB)², A_max)`, and
/// `G = G_max − min(−(A_V + A_H), A_max)`, with boresight at `θ = 90°`,
/// `φ = 0` along the local `+x` axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPattern {
    pub max_gain_dbi: f64,
    pub beamwidth_deg: f64,
    pub side_lobe_limit_db: f64,
    pub front_back_db: f64,
}

impl Default for GainPattern {
    fn default() -> Self {
        Self {
            max_gain_dbi: 8.0,
            beamwidth_deg: 65.0,
            side_lobe_limit_db: 30.0,
            front_back_db: 30.0,
        }
    }
}

impl GainPattern {
    /// Gain in dBi for a direction given in the surface's local frame.
    pub fn local_gain_db(&self, local: &Vector3<f64>) -> f64 {
        let d = local.normalize();
        let theta = d.z.clamp(-1.0, 1.0).acos().to_degrees();
        let phi = d.y.atan2(d.x).to_degrees();
        let a_v =
            -(12.0 * ((theta - 90.0) / self.beamwidth_deg).powi(2)).min(self.side_lobe_limit_db);
        let a_h = -(12.0 * (phi / self.beamwidth_deg).powi(2)).min(self.front_back_db);
        self.max_gain_dbi - (-(a_v + a_h)).min(self.front_back_db)
    }

    /// Linear power gain of a surface rotated by `u` toward global direction `f`.
    pub fn gain(&self, u: &EulerAngles, f: &UnitVector3) -> f64 {
        let local = rotation_matrix(u).transpose() * f.as_ref();
        10f64
            .powf(self.local_gain_db(&local) / 10.0)
            .max(GAIN_FLOOR)
    }
}

/// `G(R⁻¹(u)·f)` as a linear power gain.
pub fn element_gain(u: &EulerAngles, f: &UnitVector3, pattern: &GainPattern) -> f64 {
    pattern.gain(u, f)
}

/// Shape shared by every surface of an array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub surfaces: usize,
    /// Antenna offsets in the surface frame, meters.
    pub local_offsets: Vec<Vector3<f64>>,
    pub wavelength: f64,
    /// Diameter of the smallest disk enclosing one surface, meters.
    pub enclosing_diameter: f64,
    #[serde(default)]
    pub pattern: GainPattern,
}

impl ArrayGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.surfaces == 0 || self.local_offsets.is_empty() {
            return Err(Error::InvalidArgument(
                "array needs at least one surface and one antenna".into(),
            ));
        }
        if !(self.wavelength > 0.0 && self.enclosing_diameter > 0.0) {
            return Err(Error::InvalidArgument(
                "wavelength and enclosing diameter must be positive".into(),
            ));
        }
        let reach = self
            .local_offsets
            .iter()
            .map(|o| o.norm())
            .fold(0.0, f64::max);
        if self.enclosing_diameter < 2.0 * reach - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "enclosing diameter {} does not cover antenna offsets reaching {}",
                self.enclosing_diameter, reach
            )));
        }
        Ok(())
    }

    pub fn antennas_per_surface(&self) -> usize {
        self.local_offsets.len()
    }

    pub fn total_antennas(&self) -> usize {
        self.surfaces * self.local_offsets.len()
    }

    pub fn cer_radius(&self) -> f64 {
        self.enclosing_diameter / 2.0
    }
}

/// Poses of all surfaces, in surface order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayState {
    pub poses: Vec<SurfacePose>,
}

impl ArrayState {
    pub fn new(poses: Vec<SurfacePose>) -> Self {
        Self { poses }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Entry `n` is `exp(−j·2π/λ·fᵀ·r_n)`.
pub fn steering_vector(
    pose: &SurfacePose,
    f: &UnitVector3,
    geom: &ArrayGeometry,
) -> DVector<Complex64> {
    let k = std::f64::consts::TAU / geom.wavelength;
    let pos = antenna_positions(pose, &geom.local_offsets);
    DVector::from_iterator(
        pos.len(),
        pos.iter()
            .map(|r| Complex64::from_polar(1.0, -k * f.dot(r))),
    )
}

/// `Ã`: column `l` is the stacked steering vector of path `l`, with the
/// block of surface `b` scaled by `sqrt(g(u_b, f_l))`.
///
/// The number of rows follows `state` (which may hold fewer than
/// `geom.surfaces` poses while an array is being built up).
pub fn weighted_steering_matrix(
    state: &ArrayState,
    stats: &UserPathStats,
    geom: &ArrayGeometry,
) -> DMatrix<Complex64> {
    let n = geom.antennas_per_surface();
    let mut m = DMatrix::zeros(state.len() * n, stats.num_paths());
    for (l, f) in stats.doas.iter().enumerate() {
        for (b, pose) in state.poses.iter().enumerate() {
            let amp = geom.pattern.gain(&pose.rotation, f).sqrt();
            let a = steering_vector(pose, f, geom);
            m.view_mut((b * n, l), (n, 1))
                .copy_from(&(a * Complex64::from(amp)));
        }
    }
    m
}

/// Covariance `Σ = Ã·D·Ãᴴ`, kept together with its factor so that channels
/// can be drawn without a matrix square root.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCovariance {
    matrix: DMatrix<Complex64>,
    factor: DMatrix<Complex64>,
    path_powers: Vec<f64>,
}

impl ChannelCovariance {
    pub fn from_factor(factor: DMatrix<Complex64>, path_powers: Vec<f64>) -> Result<Self> {
        if factor.ncols() != path_powers.len() {
            return Err(Error::DimensionMismatch {
                expected: factor.ncols(),
                found: path_powers.len(),
            });
        }
        let mut scaled = factor.clone();
        for (l, p) in path_powers.iter().enumerate() {
            scaled.column_mut(l).scale_mut(*p);
        }
        let matrix = &scaled * factor.adjoint();
        Ok(Self {
            matrix,
            factor,
            path_powers,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// The weighted steering matrix `Ã`.
    pub fn factor(&self) -> &DMatrix<Complex64> {
        &self.factor
    }

    pub fn path_powers(&self) -> &[f64] {
        &self.path_powers
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Covariance of `U·h` for a unitary `U`.
    pub fn conjugated(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.ncols(),
            });
        }
        Self::from_factor(unitary * &self.factor, self.path_powers.clone())
    }

    /// Adds one more independent path with steering column `column`.
    pub fn with_extra_path(&self, column: &DVector<Complex64>, power: f64) -> Result<Self> {
        if column.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: column.len(),
            });
        }
        let factor = self
            .factor
            .clone()
            .insert_column(self.factor.ncols(), Complex64::from(0.0));
        let mut factor = factor;
        factor.column_mut(self.factor.ncols()).copy_from(column);
        let mut powers = self.path_powers.clone();
        powers.push(power);
        Self::from_factor(factor, powers)
    }
}

pub fn covariance(
    state: &ArrayState,
    stats: &UserPathStats,
    geom: &ArrayGeometry,
) -> ChannelCovariance {
    let factor = weighted_steering_matrix(state, stats, geom);
    ChannelCovariance::from_factor(factor, stats.path_powers.clone())
        .expect("factor has one column per path")
}

/// Draws `h = Ã·v` with independent `v_l ~ CN(0, α²_l)`.
pub fn sample_channel<R: Rng + ?Sized>(cov: &ChannelCovariance, rng: &mut R) -> DVector<Complex64> {
    let mut h = DVector::zeros(cov.dim());
    for (l, p) in cov.path_powers.iter().enumerate() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        if *p == 0.0 {
            continue;
        }
        let v = Complex64::new(re, im) * (p / 2.0).sqrt();
        h.axpy(v, &cov.factor.column(l), Complex64::from(1.0));
    }
    h
}
