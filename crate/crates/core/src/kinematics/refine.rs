use std::io::Write;
use std::path::Path;

use nalgebra::{Isometry3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{forward_transform, ArticulationTree, JointState};
use super::{pose_with_transforms, sample_joint_state};
use crate::asset_io::{sample_mesh, SegmentedObject};
use crate::error::{Error, Result};
use crate::geometry::Solid;
use crate::viewprompt::{view_cameras, Camera, RenderSettings};

/// Objective value and a displacement per mesh vertex of every part (outer index follows
/// `posed.parts`). An empty outer list or an empty part entry means no displacement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuidanceOutput {
    pub objective: f64,
    pub displacements: Vec<Vec<Vector3<f64>>>,
}

/// A source of per-vertex geometry updates evaluated on a posed object.
pub trait Guidance {
    /// `part_transforms[i]` maps part `i` from rest to its posed placement.
    fn evaluate(
        &mut self,
        posed: &SegmentedObject,
        camera: &Camera,
        part_transforms: &[Isometry3<f64>],
    ) -> std::result::Result<GuidanceOutput, String>;
}

/// Leaves geometry untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGuidance;

impl Guidance for ZeroGuidance {
    fn evaluate(&mut self, _: &SegmentedObject, _: &Camera, _: &[Isometry3<f64>]) -> std::result::Result<GuidanceOutput, String> {
        Ok(GuidanceOutput::default())
    }
}

/// Sphere attached to a part's rest frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereTarget {
    pub part: String,
    pub center: Point3<f64>,
    pub radius: f64,
}

/// Pulls each targeted part's vertices radially onto its sphere and pushes vertices that
/// sit inside other parts at the sampled pose back to their surfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfPull {
    pub targets: Vec<SphereTarget>,
    /// Fraction of the signed distance removed per iteration, in `(0, 1]`.
    pub rate: f64,
    pub penetration_weight: f64,
}

impl Guidance for SdfPull {
    fn evaluate(
        &mut self,
        posed: &SegmentedObject,
        _camera: &Camera,
        part_transforms: &[Isometry3<f64>],
    ) -> std::result::Result<GuidanceOutput, String> {
        let mut displacements: Vec<Vec<Vector3<f64>>> = posed.parts.iter().map(|_| Vec::new()).collect();
        let mut sdf_sum = 0.0;
        let mut sdf_count = 0usize;
        let mut depth_sum = 0.0;
        for target in &self.targets {
            let pi = posed
                .part_index(&target.part)
                .ok_or_else(|| format!("target names unknown part {}", target.part))?;
            let center = part_transforms.get(pi).copied().unwrap_or_else(Isometry3::identity) * target.center;
            let others: Vec<Solid> = posed
                .parts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != pi)
                .filter_map(|(_, p)| Solid::new(&p.mesh))
                .collect();
            let mesh = &posed.parts[pi].mesh;
            let d = &mut displacements[pi];
            d.resize(mesh.vertices.len(), Vector3::zeros());
            for (k, v) in mesh.vertices.iter().enumerate() {
                let offset = v - center;
                let dist = offset.norm();
                let sdf = dist - target.radius;
                sdf_sum += sdf.abs();
                sdf_count += 1;
                if dist > 0.0 {
                    d[k] -= offset / dist * (self.rate * sdf);
                }
                if self.penetration_weight > 0.0 {
                    for s in &others {
                        if s.contains(v) {
                            let surface = s.closest_surface_point(v);
                            depth_sum += (surface - v).norm();
                            d[k] += (surface - v) * self.penetration_weight;
                        }
                    }
                }
            }
        }
        let n = sdf_count.max(1) as f64;
        Ok(GuidanceOutput {
            objective: (sdf_sum + self.penetration_weight * depth_sum) / n,
            displacements,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceStep {
    pub iteration: usize,
    pub sampled_state: JointState,
    pub camera: Camera,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub trace: Vec<GuidanceStep>,
    pub object: SegmentedObject,
}

/// Guidance failure with everything recorded before it.
#[derive(Debug)]
pub struct RefinementFailure {
    pub trace: Vec<GuidanceStep>,
    pub error: Error,
}

/// Per-part rest-to-posed transforms.
pub fn part_transforms(object: &SegmentedObject, tree: &ArticulationTree, link_transforms: &[Isometry3<f64>]) -> Vec<Isometry3<f64>> {
    object
        .parts
        .iter()
        .map(|p| link_transforms[tree.link_of_part(&p.name)])
        .collect()
}

/// Moves rest-pose vertices by posed-frame displacements rotated back through each part's
/// transform.
pub fn apply_displacements(rest: &mut SegmentedObject, part_transforms: &[Isometry3<f64>], displacements: &[Vec<Vector3<f64>>]) -> bool {
    let mut changed = false;
    for ((part, t), d) in rest.parts.iter_mut().zip(part_transforms).zip(displacements) {
        for (v, dv) in part.mesh.vertices.iter_mut().zip(d) {
            if *dv != Vector3::zeros() {
                *v += t.rotation.inverse_transform_vector(dv);
                changed = true;
            }
        }
    }
    changed
}

/// Randomized-pose refinement: sample a joint state and a camera, evaluate guidance on the
/// posed object, accumulate displacements in the rest pose.
pub fn refinement_loop(
    object: &SegmentedObject,
    tree: &ArticulationTree,
    guidance: &mut dyn Guidance,
    iterations: usize,
    seed: u64,
    settings: &RenderSettings,
) -> std::result::Result<Refinement, RefinementFailure> {
    let cameras = view_cameras(object, settings);
    let mut camera_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xCA3E_7A5E);
    let mut rest = object.clone();
    let mut trace = Vec::with_capacity(iterations);
    let mut changed = false;
    for iteration in 0..iterations {
        let q = sample_joint_state(tree, seed, iteration as u64);
        let links = match forward_transform(tree, &q) {
            Ok(t) => t,
            Err(error) => return Err(RefinementFailure { trace, error }),
        };
        let transforms = part_transforms(&rest, tree, &links);
        let posed = pose_with_transforms(&rest, tree, &links);
        let camera = cameras[camera_rng.gen_range(0..cameras.len())];
        let out = match guidance.evaluate(&posed, &camera, &transforms) {
            Ok(o) => o,
            Err(message) => {
                return Err(RefinementFailure {
                    trace,
                    error: Error::Guidance { iteration, message },
                })
            }
        };
        changed |= apply_displacements(&mut rest, &transforms, &out.displacements);
        trace.push(GuidanceStep {
            iteration,
            sampled_state: q,
            camera,
            objective: out.objective,
        });
    }
    if changed {
        for part in &mut rest.parts {
            let (n, seed) = (part.cloud.len(), part.cloud.seed);
            if n > 0 {
                if let Ok(cloud) = sample_mesh(&part.mesh, n, seed) {
                    part.cloud = cloud;
                }
            }
        }
    }
    Ok(Refinement { trace, object: rest })
}

/// One JSON object per line.
pub fn write_trace_jsonl(trace: &[GuidanceStep], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for step in trace {
        let line = serde_json::to_string(step)?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
