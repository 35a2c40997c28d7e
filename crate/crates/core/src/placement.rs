//! Position assignment for fixed rotations.
//!
//! Every surface is represented by its circular extended region (CER), the
//! smallest disk enclosing it. A placement is feasible when each CER lies in
//! the closed halfspace behind every other surface. Surfaces are placed one
//! at a time: the next surface is the pending one best aligned with an
//! already placed surface, its plane is pushed out until it just touches the
//! placed CERs, and it is put next to the touching point. If that spot
//! clashes with another placed surface, all placed surfaces are first slid
//! outward within the new plane by half a CER diameter.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::channel::ArrayGeometry;
use crate::exec::Execution;
use crate::geometry::{
    disk_support, halfspace_contains_disk, in_plane_unit, penetration_depth, Disk3D, Halfspace,
    SurfacePose, UnitVector3,
};
use crate::rotation::RotationVector;

/// Which surfaces already have positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementState {
    /// Placed surfaces in placement order.
    pub placed: Vec<usize>,
    /// Remaining surfaces in ascending index order.
    pub pending: Vec<usize>,
    /// One entry per surface; meaningful only for placed ones.
    pub positions: Vec<Vector3<f64>>,
}

impl PlacementState {
    pub fn new(surfaces: usize) -> Self {
        Self {
            placed: Vec::new(),
            pending: (0..surfaces).collect(),
            positions: vec![Vector3::zeros(); surfaces],
        }
    }

    pub fn place(&mut self, b: usize, position: Vector3<f64>) {
        let i = self
            .pending
            .iter()
            .position(|&p| p == b)
            .expect("surface is pending");
        self.pending.remove(i);
        self.placed.push(b);
        self.positions[b] = position;
    }

    fn cer(&self, b: usize, normals: &[UnitVector3], radius: f64) -> Disk3D {
        Disk3D::new(self.positions[b], normals[b], radius)
    }
}

/// Pending surface whose normal is best aligned with some placed surface.
pub fn select_next(state: &PlacementState, normals: &[UnitVector3]) -> usize {
    let mut best = (state.pending[0], f64::NEG_INFINITY);
    for &b in &state.pending {
        let align = state
            .placed
            .iter()
            .map(|&p| normals[b].dot(&normals[p]))
            .fold(f64::NEG_INFINITY, f64::max);
        if align > best.1 {
            best = (b, align);
        }
    }
    best.0
}

/// Supporting plane of the placed CERs with a given normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    /// Plane offset: the plane is `{x | nᵀx = chi}`.
    pub chi: f64,
    /// Placed surface whose CER touches the plane.
    pub surface: usize,
    pub point: Vector3<f64>,
}

pub fn tangent_hyperplane(
    state: &PlacementState,
    next: usize,
    normals: &[UnitVector3],
    diameter: f64,
) -> Tangent {
    let dir = &normals[next];
    let mut best: Option<Tangent> = None;
    for &b in &state.placed {
        let s = disk_support(&state.cer(b, normals, diameter / 2.0), dir);
        if best.is_none_or(|t| s.value > t.chi) {
            best = Some(Tangent {
                chi: s.value,
                surface: b,
                point: s.point,
            });
        }
    }
    best.expect("at least one placed surface")
}

/// Candidate center half a diameter from the touching point, opposite to
/// the in-plane direction of the touching surface's normal. Falls back to
/// the touching point itself (second value `true`) when that normal is
/// parallel to the new one.
pub fn initial_guess(
    touch: &Vector3<f64>,
    tangent_normal: &UnitVector3,
    next_normal: &UnitVector3,
    diameter: f64,
) -> (Vector3<f64>, bool) {
    match in_plane_unit(tangent_normal, next_normal) {
        Some(dir) => (touch - dir * (diameter / 2.0), false),
        None => (*touch, true),
    }
}

/// Slides every placed surface by half a diameter along its normal's
/// projection onto the plane with normal `next_normal`. Surfaces parallel
/// to that normal stay put.
pub fn shift_placed(
    state: &mut PlacementState,
    next_normal: &UnitVector3,
    normals: &[UnitVector3],
    diameter: f64,
) {
    for &b in &state.placed {
        if let Some(dir) = in_plane_unit(&normals[b], next_normal) {
            state.positions[b] += dir * (diameter / 2.0);
        }
    }
}

/// Surface `b` at `position` clears all placed surfaces and vice versa.
fn fits(
    state: &PlacementState,
    b: usize,
    position: &Vector3<f64>,
    normals: &[UnitVector3],
    radius: f64,
    tol: f64,
) -> bool {
    let disk = Disk3D::new(*position, normals[b], radius);
    let own = Halfspace::new(normals[b], *position);
    state.placed.iter().all(|&p| {
        halfspace_contains_disk(&Halfspace::new(normals[p], state.positions[p]), &disk, tol)
            && halfspace_contains_disk(&own, &state.cer(p, normals, radius), tol)
    })
}

/// Ordered pair `(outer, inner)` where the CER of `inner` pokes through the
/// plane of `outer` by `depth` meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub outer: usize,
    pub inner: usize,
    pub depth: f64,
}

/// Checks every ordered pair of distinct surfaces.
pub fn verify_feasibility(
    positions: &[Vector3<f64>],
    normals: &[UnitVector3],
    radius: f64,
    tol: f64,
) -> (bool, Vec<Violation>) {
    let n = positions.len();
    let violations: Vec<Violation> = Execution::default()
        .map(n * n, |i| {
            let (outer, inner) = (i / n, i % n);
            if outer == inner {
                return None;
            }
            let h = Halfspace::new(normals[outer], positions[outer]);
            let depth =
                penetration_depth(&h, &Disk3D::new(positions[inner], normals[inner], radius));
            (depth > tol).then_some(Violation {
                outer,
                inner,
                depth,
            })
        })
        .into_iter()
        .flatten()
        .collect();
    (violations.is_empty(), violations)
}

/// [`verify_feasibility`] for positions `q` and rotations `u` of an array
/// with the shape of `geom`.
pub fn verify(
    q: &[Vector3<f64>],
    u: &RotationVector,
    geom: &ArrayGeometry,
    tol: f64,
) -> (bool, Vec<Violation>) {
    let normals: Vec<UnitVector3> = u
        .angles()
        .iter()
        .map(crate::geometry::surface_normal)
        .collect();
    verify_feasibility(q, &normals, geom.cer_radius(), tol)
}

/// Axis-aligned box around a set of disks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl BoundingBox {
    pub fn of_disks(disks: &[Disk3D]) -> Self {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for d in disks {
            for axis in 0..3 {
                let n = d.normal[axis];
                let half = d.radius * (1.0 - n * n).max(0.0).sqrt();
                min[axis] = min[axis].min(d.center[axis] - half);
                max[axis] = max[axis].max(d.center[axis] + half);
            }
        }
        Self { min, max }
    }

    /// Edge of the smallest axis-aligned cube containing the box.
    pub fn cube_edge(&self) -> f64 {
        (self.max - self.min).max()
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.max + self.min) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementOptions {
    pub tol: f64,
    /// Shift passes allowed per surface; 1 reproduces the plain algorithm,
    /// larger values enable the diagnostic retry.
    pub max_shift_passes: usize,
    /// Translate the result so its bounding cube is centered at the origin.
    pub center: bool,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_shift_passes: 1,
            center: true,
        }
    }
}

/// How one surface got its position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementStep {
    pub surface: usize,
    pub tangent_surface: Option<usize>,
    pub parallel_fallback: bool,
    pub shift_passes: usize,
    /// Local clearance check after the last pass (always true for the first
    /// surface).
    pub cleared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub positions: Vec<Vector3<f64>>,
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub bounding_cube_edge: f64,
    pub steps: Vec<PlacementStep>,
}

impl PlacementResult {
    pub fn poses(&self, u: &RotationVector) -> Vec<SurfacePose> {
        self.positions
            .iter()
            .zip(u.angles())
            .map(|(q, a)| SurfacePose::new(*q, a))
            .collect()
    }

    /// Surfaces that needed more than one shift pass or never cleared.
    pub fn retried(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.shift_passes > 1 || !s.cleared)
            .map(|s| s.surface)
            .collect()
    }
}

/// Positions for the rotations `u`, starting with surface 0 at the origin.
pub fn place_surfaces(
    u: &RotationVector,
    geom: &ArrayGeometry,
    opts: &PlacementOptions,
) -> PlacementResult {
    let normals: Vec<UnitVector3> = u
        .angles()
        .iter()
        .map(crate::geometry::surface_normal)
        .collect();
    let b_count = normals.len();
    let d = geom.enclosing_diameter;
    let radius = d / 2.0;
    let mut state = PlacementState::new(b_count);
    let mut steps = Vec::with_capacity(b_count);

    if b_count > 0 {
        state.place(0, Vector3::zeros());
        steps.push(PlacementStep {
            surface: 0,
            tangent_surface: None,
            parallel_fallback: false,
            shift_passes: 0,
            cleared: true,
        });
    }
    while !state.pending.is_empty() {
        let next = select_next(&state, &normals);
        let tan = tangent_hyperplane(&state, next, &normals, d);
        let (guess, fallback) = initial_guess(&tan.point, &normals[tan.surface], &normals[next], d);
        let mut step = PlacementStep {
            surface: next,
            tangent_surface: Some(tan.surface),
            parallel_fallback: fallback,
            shift_passes: 0,
            cleared: true,
        };
        let position = if fits(&state, next, &guess, &normals, radius, opts.tol) {
            guess
        } else {
            loop {
                shift_placed(&mut state, &normals[next], &normals, d);
                step.shift_passes += 1;
                step.cleared = fits(&state, next, &tan.point, &normals, radius, opts.tol);
                if step.cleared || step.shift_passes >= opts.max_shift_passes.max(1) {
                    break tan.point;
                }
            }
        };
        state.place(next, position);
        steps.push(step);
    }

    let disks: Vec<Disk3D> = (0..b_count)
        .map(|b| Disk3D::new(state.positions[b], normals[b], radius))
        .collect();
    let bbox = BoundingBox::of_disks(&disks);
    let mut positions = state.positions;
    if opts.center && b_count > 0 {
        let c = bbox.center();
        positions.iter_mut().for_each(|q| *q -= c);
    }
    let (feasible, violations) = verify_feasibility(&positions, &normals, radius, opts.tol);
    PlacementResult {
        positions,
        feasible,
        violations,
        bounding_cube_edge: if b_count > 0 { bbox.cube_edge() } else { 0.0 },
        steps,
    }
}
