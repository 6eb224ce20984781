//! Joint solvers: revolute axes from selected candidates, prismatic directions from the
//! connecting-area plane, and swept limit validation.

mod spec;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

pub use spec::{JointSpec, JointType, Provenance, Solver};

use crate::asset_io::{SegmentedObject, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::{canonical_sign, fit_line, ConnectingArea, Line, Obstacles};
use crate::kinematics::{link_transforms_unchecked, ArticulationTree};
use crate::viewprompt::CandidateSet;

/// Line through the selected candidates' 3D points.
pub fn solve_revolute_two_point(candidates: &CandidateSet, selected: &[u32]) -> Result<Line> {
    if selected.len() < 2 {
        return Err(Error::CoincidentSelection(format!(
            "need at least two points, got {}",
            selected.len()
        )));
    }
    let points = selected
        .iter()
        .map(|&id| candidates.get(id).map(|c| c.point).ok_or(Error::UnknownCandidate(id)))
        .collect::<Result<Vec<_>>>()?;
    fit_line(&points).map_err(|_| Error::CoincidentSelection(format!("ids {selected:?} share one location")))
}

/// Axis through `point` along the connecting-area plane normal.
pub fn solve_revolute_single_point(point: Point3<f64>, area: &ConnectingArea) -> Result<Line> {
    Ok(Line::new(point, area.plane()?.normal))
}

/// Plane normal pointing away from the parent centroid. The flag is set when the centroid
/// lies on the plane and the sign fell back to the dominant-axis rule.
pub fn solve_prismatic_inout(area: &ConnectingArea, parent_centroid: &Point3<f64>) -> Result<(Vector3<f64>, bool)> {
    let (plane, tie) = area.plane()?.oriented_away_from(parent_centroid);
    if tie {
        log::warn!("parent centroid lies on the connecting plane; using dominant-axis sign");
        return Ok((canonical_sign(plane.normal), true));
    }
    Ok((plane.normal, false))
}

/// Arrow direction projected onto the connecting-area plane.
pub fn solve_prismatic_surface(arrow: &Vector3<f64>, area: &ConnectingArea) -> Result<Vector3<f64>> {
    let n = area.plane()?.normal;
    let a = arrow.normalize();
    let projected = a - n * a.dot(&n);
    if projected.norm() < 1e-9 {
        return Err(Error::ArrowParallel);
    }
    Ok(projected.normalize())
}

/// Declared limits in child-extent units scaled to absolute lengths along `axis`.
pub fn finalize_prismatic_limits(decl: [f64; 2], child: &TriMesh, axis: &Vector3<f64>) -> [f64; 2] {
    let extent = child.extent_along(axis);
    [decl[0] * extent, decl[1] * extent]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    /// Degrees.
    pub step: f64,
    pub pen_threshold: f64,
    pub eps: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            step: 2.0,
            pen_threshold: 0.02,
            eps: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Degrees, within `[-360, 360]`.
    pub limits: [f64; 2],
    pub rest_fraction: f64,
    pub rest_violation: bool,
    /// Penetration fraction at the first blocked step on each side, if any.
    pub blocked_lower: Option<f64>,
    pub blocked_upper: Option<f64>,
}

/// Moving sample points of a joint's subtree and the remaining parts as obstacles.
struct SweepScene<'a> {
    tree: &'a ArticulationTree,
    joint: usize,
    moving: Vec<(usize, Vec<Point3<f64>>)>,
    obstacles: Obstacles,
}

impl<'a> SweepScene<'a> {
    fn new(object: &SegmentedObject, tree: &'a ArticulationTree, joint: usize) -> Self {
        let subtree = tree.subtree(&tree.joints[joint].child);
        let mut moving: Vec<(usize, Vec<Point3<f64>>)> = Vec::new();
        let mut still = Vec::new();
        for part in &object.parts {
            let link = tree.link_of_part(&part.name);
            if subtree.contains(&link) {
                match moving.iter_mut().find(|(l, _)| *l == link) {
                    Some((_, pts)) => pts.extend_from_slice(&part.cloud.points),
                    None => moving.push((link, part.cloud.points.clone())),
                }
            } else {
                still.push(&part.mesh);
            }
        }
        SweepScene {
            tree,
            joint,
            moving,
            obstacles: Obstacles::new(still),
        }
    }

    fn fraction(&self, degrees: f64, eps: f64) -> f64 {
        let mut per_joint = vec![0.0; self.tree.joints.len()];
        per_joint[self.joint] = degrees.to_radians();
        let transforms = link_transforms_unchecked(self.tree, &per_joint, &Default::default());
        let posed: Vec<Point3<f64>> = self
            .moving
            .iter()
            .flat_map(|(l, pts)| {
                let t = transforms[*l];
                pts.iter().map(move |p| t * p)
            })
            .collect();
        self.obstacles.fraction(&posed, eps)
    }
}

/// Penetration fraction of the joint's subtree posed at `degrees`, other joints at rest.
pub fn penetration_at(object: &SegmentedObject, tree: &ArticulationTree, joint: usize, degrees: f64, eps: f64) -> f64 {
    SweepScene::new(object, tree, joint).fraction(degrees, eps)
}

/// Rotates the child subtree in `step` increments both ways from rest and returns the
/// widest collision-free interval around zero, clipped to ±360°.
pub fn validate_revolute_limits(
    object: &SegmentedObject,
    tree: &ArticulationTree,
    joint: usize,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    let spec = tree
        .joints
        .get(joint)
        .ok_or_else(|| Error::InvalidTree(format!("no joint {joint}")))?;
    if !spec.joint_type.is_rotational() {
        return Err(Error::InvalidTree(format!("joint {} is not revolute", spec.name)));
    }
    if !(settings.step > 0.0) {
        return Err(Error::Config("sweep step must be positive".into()));
    }
    let scene = SweepScene::new(object, tree, joint);
    let rest_fraction = scene.fraction(0.0, settings.eps);
    if rest_fraction > settings.pen_threshold {
        log::warn!(
            "joint {}: invalid rest state, {:.3} of child points penetrate",
            spec.name,
            rest_fraction
        );
        return Ok(SweepReport {
            limits: [0.0, 0.0],
            rest_fraction,
            rest_violation: true,
            blocked_lower: None,
            blocked_upper: None,
        });
    }
    let sweep = |sign: f64| -> (f64, Option<f64>) {
        let mut reached = 0.0;
        let mut k = 1usize;
        loop {
            let angle = (k as f64 * settings.step).min(360.0);
            let f = scene.fraction(sign * angle, settings.eps);
            if f > settings.pen_threshold {
                return (reached, Some(f));
            }
            reached = angle;
            if angle >= 360.0 {
                return (reached, None);
            }
            k += 1;
        }
    };
    let (upper, blocked_upper) = sweep(1.0);
    let (lower, blocked_lower) = sweep(-1.0);
    Ok(SweepReport {
        limits: [-lower, upper],
        rest_fraction,
        rest_violation: false,
        blocked_lower,
        blocked_upper,
    })
}

/// Flips a revolute axis when a small positive rotation collides more than a negative one,
/// so that positive limits open away from the parent. Returns whether it flipped.
pub fn orient_revolute_axis(object: &SegmentedObject, tree: &mut ArticulationTree, joint: usize, step: f64) -> bool {
    let scene = SweepScene::new(object, tree, joint);
    let plus = scene.fraction(step, 0.0);
    let minus = scene.fraction(-step, 0.0);
    if plus > minus {
        let axis = tree.joints[joint].axis.reversed();
        tree.joints[joint].axis = axis;
        true
    } else {
        false
    }
}

/// Intersection of the swept and declared intervals; an empty intersection collapses to `[0, 0]`.
pub fn intersect_limits(swept: [f64; 2], declared: [f64; 2]) -> [f64; 2] {
    let lo = swept[0].max(declared[0]);
    let hi = swept[1].min(declared[1]);
    if lo <= hi {
        [lo, hi]
    } else {
        [0.0, 0.0]
    }
}

/// A swept interval spanning the full ±360° marks a free-spinning joint.
pub fn spans_full_turn(limits: [f64; 2]) -> bool {
    limits[1] - limits[0] >= 720.0 - 1e-9
}

/// Per-joint entry of the joint report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    pub solver: Solver,
    pub axis: Option<Line>,
    /// Limits in prompt units: degrees or child-extent multiples.
    pub limits: Option<[f64; 2]>,
    pub transcripts: Vec<String>,
    pub notes: Vec<String>,
    pub sweep: Option<SweepReport>,
    pub error: Option<String>,
}

impl JointReport {
    pub fn from_spec(spec: &JointSpec, sweep: Option<SweepReport>) -> Self {
        JointReport {
            name: spec.name.clone(),
            joint_type: spec.joint_type,
            parent: spec.parent.clone(),
            child: spec.child.clone(),
            solver: spec.provenance.solver,
            axis: spec.joint_type.is_actuated().then_some(spec.axis),
            limits: spec.limits,
            transcripts: spec.provenance.transcripts.clone(),
            notes: spec.provenance.notes.clone(),
            sweep,
            error: None,
        }
    }
}
