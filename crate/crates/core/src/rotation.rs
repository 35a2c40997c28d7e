//! Rotation design with positions tied to rotations.
//!
//! During this stage each surface sits on a sphere of radius `d_ins` along
//! its own normal, so the array is parameterized by the `3B` Euler angles
//! alone. The sum-log surrogate is maximized by greedy selection from a
//! Fibonacci candidate set followed by forward-difference gradient ascent
//! with Armijo backtracking.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::channel::{covariance, ArrayGeometry, ArrayState, ChannelCovariance, UserPathStats};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{surface_normal, EulerAngles, SurfacePose};
use crate::rate::{sum_log_rate, PowerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Size of the Fibonacci candidate set.
    pub candidates: usize,
    pub max_iterations: usize,
    /// Forward-difference step, radians.
    pub fd_step: f64,
    pub initial_step: f64,
    /// Backtracking factor in `(0, 1)`.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            candidates: 512,
            max_iterations: 20,
            fd_step: 2f64.powi(-16),
            initial_step: 1.0,
            backtrack: 0.5,
            max_backtracks: 30,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.candidates == 0 {
            return Err(Error::InvalidArgument(
                "candidate count must be positive".into(),
            ));
        }
        if !(self.fd_step > 0.0 && self.initial_step > 0.0) {
            return Err(Error::InvalidArgument(
                "finite-difference step and initial step must be positive".into(),
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument(
                "backtracking factor must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Inscribed-sphere radius used to place surfaces during rotation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMap {
    pub radius: f64,
}

impl SphereMap {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(
                "sphere radius must be positive".into(),
            ));
        }
        Ok(Self { radius })
    }

    /// Largest sphere inside a cube of the given edge.
    pub fn for_cube(edge: f64) -> Result<Self> {
        Self::new(edge / 2.0)
    }
}

/// Surface at `d_ins·n(u)` facing outward.
pub fn pose_from_rotation(u: &EulerAngles, map: &SphereMap) -> SurfacePose {
    SurfacePose::new(map.radius * surface_normal(u).into_inner(), *u)
}

/// Concatenated Euler angles of all surfaces, `(α₁, β₁, γ₁, α₂, …)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationVector(Vec<f64>);

impl RotationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(3) {
            return Err(Error::InvalidArgument(format!(
                "rotation vector length {} is not a multiple of 3",
                values.len()
            )));
        }
        Ok(Self(values))
    }

    pub fn from_angles(angles: &[EulerAngles]) -> Self {
        Self(angles.iter().flat_map(|a| a.to_array()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn surfaces(&self) -> usize {
        self.0.len() / 3
    }

    pub fn angles(&self) -> Vec<EulerAngles> {
        self.0
            .chunks_exact(3)
            .map(EulerAngles::from_slice)
            .collect()
    }

    /// Same rotations with every component wrapped into `[0, 2π)`.
    pub fn canonicalized(&self) -> Self {
        Self::from_angles(&self.angles())
    }
}

/// Everything needed to score a rotation vector.
#[derive(Debug, Clone)]
pub struct RotationProblem {
    pub users: Vec<UserPathStats>,
    pub geometry: ArrayGeometry,
    pub power: PowerConfig,
    pub sphere: SphereMap,
    pub exec: Execution,
}

impl RotationProblem {
    pub fn new(
        users: Vec<UserPathStats>,
        geometry: ArrayGeometry,
        power: PowerConfig,
        sphere: SphereMap,
    ) -> Result<Self> {
        geometry.validate()?;
        if users.len() != power.users() {
            return Err(Error::DimensionMismatch {
                expected: users.len(),
                found: power.users(),
            });
        }
        Ok(Self {
            users,
            geometry,
            power,
            sphere,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Array state on the inscribed sphere. Works for any number of
    /// surfaces, which the greedy stage relies on.
    pub fn state(&self, u: &[f64]) -> ArrayState {
        ArrayState::new(
            u.chunks_exact(3)
                .map(|c| pose_from_rotation(&EulerAngles::from_slice(c), &self.sphere))
                .collect(),
        )
    }

    pub fn covariances(&self, state: &ArrayState) -> Vec<ChannelCovariance> {
        self.users
            .iter()
            .map(|s| covariance(state, s, &self.geometry))
            .collect()
    }

    /// Sum-log surrogate of the array described by `u`. `−∞` flags a user
    /// with zero rate; `NaN` flags a numerical failure.
    pub fn objective(&self, u: &[f64]) -> f64 {
        if u.iter().any(|x| !x.is_finite()) {
            return f64::NAN;
        }
        let covs = self.covariances(&self.state(u));
        sum_log_rate(&covs, &self.power).unwrap_or(f64::NAN)
    }
}

/// Index of the largest value; `NaN` loses to everything, ties go to the
/// lowest index.
fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Picks one rotation per surface, each time taking the candidate that
/// maximizes the objective of the partial array built so far.
pub fn greedy_init(
    problem: &RotationProblem,
    candidates: &[EulerAngles],
    surfaces: usize,
) -> Result<RotationVector> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("candidate set is empty".into()));
    }
    let mut chosen: Vec<f64> = Vec::with_capacity(3 * surfaces);
    for _ in 0..surfaces {
        let scores = problem.exec.map(candidates.len(), |m| {
            let mut u = chosen.clone();
            u.extend_from_slice(&candidates[m].to_array());
            problem.objective(&u)
        });
        let best = argmax(&scores).expect("nonempty candidates");
        chosen.extend_from_slice(&candidates[best].to_array());
    }
    RotationVector::new(chosen)
}

/// Forward differences `(f(u + ε·e_i) − f(u)) / ε`.
pub fn numerical_gradient<F>(f: &F, u: &[f64], step: f64, exec: Execution) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let f0 = f(u);
    if !f0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "objective is not finite at the base point ({f0})"
        )));
    }
    let probes = exec.map(u.len(), |i| {
        let mut v = u.to_vec();
        v[i] += step;
        f(&v)
    });
    probes
        .into_iter()
        .enumerate()
        .map(|(i, fi)| {
            if fi.is_finite() {
                Ok((fi - f0) / step)
            } else {
                Err(Error::NonFiniteObjective {
                    coordinate: i,
                    value: fi,
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentResult {
    pub solution: Vec<f64>,
    /// Objective at the start and after every iteration.
    pub trace: Vec<f64>,
    pub accepted_steps: usize,
}

/// Gradient ascent with Armijo backtracking on an arbitrary objective.
///
/// Each iteration tries `τ = τ_ini·δ^ν` for `ν = 0, 1, …, ν_max` and takes
/// the first trial point `u' = u + τ·g` with
/// `f(u') − f(u) > τ·gᵀ(u' − u)`. When no trial qualifies the iterate is
/// kept. The loop stops early only if the gradient cannot be evaluated.
pub fn ascend_with<F>(f: &F, u0: &[f64], params: &SolverParams, exec: Execution) -> AscentResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut u = u0.to_vec();
    let mut fu = f(&u);
    let mut trace = vec![fu];
    let mut accepted_steps = 0;
    for _ in 0..params.max_iterations {
        let Ok(g) = numerical_gradient(f, &u, params.fd_step, exec) else {
            break;
        };
        let mut tau = params.initial_step;
        for _ in 0..=params.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(x, gi)| x + tau * gi).collect();
            let ft = f(&trial);
            let slope: f64 = g
                .iter()
                .zip(trial.iter().zip(&u))
                .map(|(gi, (t, x))| gi * (t - x))
                .sum();
            if ft.is_finite() && ft - fu > tau * slope {
                u = trial;
                fu = ft;
                accepted_steps += 1;
                break;
            }
            tau *= params.backtrack;
        }
        trace.push(fu);
    }
    AscentResult {
        solution: u,
        trace,
        accepted_steps,
    }
}

/// Ascent on the rotation objective; the solution is wrapped into `[0, 2π)`.
pub fn ascend(
    problem: &RotationProblem,
    u0: &RotationVector,
    params: &SolverParams,
) -> AscentResult {
    let f = |u: &[f64]| problem.objective(u);
    let mut res = ascend_with(&f, u0.as_slice(), params, problem.exec);
    res.solution = RotationVector(res.solution).canonicalized().0;
    res
}

/// Greedy initialization followed by ascent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationDesign {
    pub initial: RotationVector,
    pub initial_objective: f64,
    pub optimized: RotationVector,
    pub trace: Vec<f64>,
    pub accepted_steps: usize,
}

pub fn design_rotations(
    problem: &RotationProblem,
    params: &SolverParams,
) -> Result<RotationDesign> {
    params.validate()?;
    let candidates = crate::geometry::fibonacci_rotations(params.candidates)?;
    let initial = greedy_init(problem, &candidates, problem.geometry.surfaces)?;
    let initial_objective = problem.objective(initial.as_slice());
    let res = ascend(problem, &initial, params);
    Ok(RotationDesign {
        initial,
        initial_objective,
        optimized: RotationVector::new(res.solution)?,
        trace: res.trace,
        accepted_steps: res.accepted_steps,
    })
}

/// Surface normals of a rotation vector.
pub fn normals(u: &RotationVector) -> Vec<Vector3<f64>> {
    u.angles()
        .iter()
        .map(|a| surface_normal(a).into_inner())
        .collect()
}
