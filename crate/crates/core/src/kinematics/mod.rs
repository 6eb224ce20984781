//! Articulation tree, pose transform, joint-state sampling and the randomized-pose
//! refinement scheduler.

mod refine;
mod tree;

use nalgebra::Isometry3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use refine::{
    apply_displacements, part_transforms, refinement_loop, write_trace_jsonl, Guidance, GuidanceOutput, GuidanceStep, Refinement, RefinementFailure,
    SdfPull, SphereTarget, ZeroGuidance,
};
pub use tree::{
    forward_transform, forward_transform_with_floating, joint_motion, link_transforms_unchecked, ArticulationTree,
    JointState, Link,
};

use crate::asset_io::{PartSegment, SegmentedObject};
use crate::error::Result;
use crate::joints::JointType;

/// Applies per-link transforms to meshes, clouds and normals. Parts on identity links are
/// copied untouched.
pub fn pose_with_transforms(
    object: &SegmentedObject,
    tree: &ArticulationTree,
    transforms: &[Isometry3<f64>],
) -> SegmentedObject {
    let identity = Isometry3::identity();
    let parts = object
        .parts
        .iter()
        .map(|p| {
            let t = &transforms[tree.link_of_part(&p.name)];
            if *t == identity {
                return p.clone();
            }
            let mut cloud = p.cloud.clone();
            cloud.points.iter_mut().for_each(|x| *x = t * *x);
            cloud.normals.iter_mut().for_each(|n| *n = t * *n);
            PartSegment {
                name: p.name.clone(),
                mesh: p.mesh.transformed(t),
                cloud,
            }
        })
        .collect();
    SegmentedObject {
        parts,
        normalization: object.normalization,
        source_path: object.source_path.clone(),
    }
}

/// Object posed at joint state `q`; the input is left untouched.
pub fn pose_object(object: &SegmentedObject, tree: &ArticulationTree, q: &JointState) -> Result<SegmentedObject> {
    let transforms = forward_transform(tree, q)?;
    Ok(pose_with_transforms(object, tree, &transforms))
}

/// Uniform draw within each actuated joint's limits (continuous joints over `[0, 2π)`),
/// deterministic in `(seed, iteration)`.
pub fn sample_joint_state(tree: &ArticulationTree, seed: u64, iteration: u64) -> JointState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    let values = tree
        .actuated_joints()
        .into_iter()
        .map(|j| {
            if tree.joints[j].joint_type == JointType::Continuous {
                rng.gen_range(0.0..std::f64::consts::TAU)
            } else {
                let (lo, hi) = tree.motion_range(j);
                let u: f64 = rng.gen();
                if hi > lo {
                    (lo + (hi - lo) * u).min(hi)
                } else {
                    lo
                }
            }
        })
        .collect();
    JointState { values }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use nalgebra::{Matrix4, Point3, Vector3};

    use super::*;
    use crate::asset_io::{box_mesh, SampleOptions, TriMesh};
    use crate::geometry::Line;
    use crate::joints::{JointSpec, Provenance};

    fn joint(name: &str, t: JointType, parent: &str, child: &str, axis: Line, limits: Option<[f64; 2]>) -> JointSpec {
        JointSpec {
            name: name.into(),
            joint_type: t,
            parent: parent.into(),
            child: child.into(),
            axis,
            limits,
            provenance: Provenance::default(),
        }
    }

    fn link(name: &str, mesh: TriMesh) -> Link {
        Link {
            name: name.into(),
            parts: vec![name.into()],
            mesh,
        }
    }

    fn unit_box() -> TriMesh {
        box_mesh(Point3::origin(), Point3::new(1.0, 1.0, 1.0))
    }

    fn chain() -> ArticulationTree {
        let z = Line::new(Point3::origin(), Vector3::z());
        let x = Line::new(Point3::new(1.0, 0.0, 0.0), Vector3::x());
        ArticulationTree::new(
            "base",
            vec![link("base", unit_box()), link("arm", unit_box()), link("slider", unit_box())],
            vec![
                joint("j1", JointType::Revolute, "base", "arm", z, Some([-180.0, 180.0])),
                joint("j2", JointType::Prismatic, "arm", "slider", x, Some([0.0, 1.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rest_state_is_identity() {
        let tree = chain();
        let t = forward_transform(&tree, &JointState { values: vec![0.0, 0.0] }).unwrap();
        assert!(t.iter().all(|t| *t == Isometry3::identity()));
    }

    #[test]
    fn quarter_turn_maps_x_to_y() {
        let tree = chain();
        let t = forward_transform(&tree, &JointState { values: vec![FRAC_PI_2, 0.0] }).unwrap();
        let p = t[1] * Point3::new(1.0, 0.0, 0.0);
        assert!((p - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn chain_matches_hand_multiplied_matrices() {
        let tree = chain();
        let t = forward_transform(&tree, &JointState { values: vec![FRAC_PI_2, 0.3] }).unwrap();
        // rotation by 90 degrees about z through the origin
        let rz = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        // translation 0.3 along x (extent of the slider along x is 1)
        let tx = Matrix4::new(
            1.0, 0.0, 0.0, 0.3, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        let expected = rz * tx;
        assert!((t[2].to_homogeneous() - expected).abs().max() < 1e-12);
    }

    #[test]
    fn state_length_and_limits_are_checked() {
        let tree = chain();
        assert!(forward_transform(&tree, &JointState { values: vec![0.0] }).is_err());
        assert!(forward_transform(&tree, &JointState { values: vec![0.0, 1.5] }).is_err());
    }

    #[test]
    fn tree_validation_rejects_missing_links_and_two_roots() {
        let z = Line::new(Point3::origin(), Vector3::z());
        let bad = ArticulationTree::new(
            "base",
            vec![link("base", unit_box())],
            vec![joint("j", JointType::Fixed, "base", "ghost", z, None)],
        );
        assert!(bad.is_err());
        let two_roots = ArticulationTree::new("base", vec![link("base", unit_box()), link("loose", unit_box())], vec![]);
        assert!(two_roots.is_err());
    }

    #[test]
    fn degenerate_range_samples_zero() {
        let z = Line::new(Point3::origin(), Vector3::z());
        let tree = ArticulationTree::new(
            "base",
            vec![link("base", unit_box()), link("lid", unit_box())],
            vec![joint("j", JointType::Revolute, "base", "lid", z, Some([0.0, 0.0]))],
        )
        .unwrap();
        for i in 0..20 {
            assert_eq!(sample_joint_state(&tree, 5, i).values, vec![0.0]);
        }
    }

    #[test]
    fn sampler_mean_and_range() {
        let x = Line::new(Point3::origin(), Vector3::x());
        let tree = ArticulationTree::new(
            "base",
            vec![link("base", unit_box()), link("drawer", unit_box())],
            vec![joint("j", JointType::Prismatic, "base", "drawer", x, Some([0.0, 1.0]))],
        )
        .unwrap();
        let vals: Vec<f64> = (0..10_000).map(|i| sample_joint_state(&tree, 3, i).values[0]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
        assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(sample_joint_state(&tree, 3, 17), sample_joint_state(&tree, 3, 17));
    }

    #[test]
    fn posing_moves_only_the_child() {
        let lid = box_mesh(Point3::new(0.0, 0.0, 1.0), Point3::new(1.0, 1.0, 1.1));
        let object = SegmentedObject::from_meshes(
            vec![("box".into(), unit_box()), ("lid".into(), lid)],
            &SampleOptions { samples_per_part: 64, ..Default::default() },
            String::new(),
        )
        .unwrap();
        let hinge = {
            let v = &object.part("lid").unwrap().mesh.vertices[0];
            Line::new(*v, Vector3::x())
        };
        let tree = ArticulationTree::from_object(
            &object,
            "box",
            &[("box".into(), vec!["box".into()]), ("lid".into(), vec!["lid".into()])],
            vec![joint("hinge", JointType::Revolute, "box", "lid", hinge, Some([0.0, 90.0]))],
        )
        .unwrap();
        let rest = pose_object(&object, &tree, &JointState { values: vec![0.0] }).unwrap();
        assert_eq!(rest, object);
        let open = pose_object(&object, &tree, &JointState { values: vec![FRAC_PI_2] }).unwrap();
        assert_eq!(open.parts[0], object.parts[0]);
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2);
        for (a, b) in object.parts[1].mesh.vertices.iter().zip(&open.parts[1].mesh.vertices) {
            let expected = hinge.origin + r * (a - hinge.origin);
            assert!((expected - b).norm() < 1e-12);
        }
        assert!(pose_object(&object, &tree, &JointState { values: vec![3.0] }).is_err());
    }
}
