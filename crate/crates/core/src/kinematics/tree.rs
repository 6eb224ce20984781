use std::collections::{HashMap, VecDeque};

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::asset_io::{SegmentedObject, TriMesh};
use crate::error::{Error, Result};
use crate::joints::{JointSpec, JointType};

/// A rigid group of parts moving together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub parts: Vec<String>,
    pub mesh: TriMesh,
}

/// Rooted kinematic tree over links, with joint axes in rest-pose object coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulationTree {
    pub root: String,
    pub links: Vec<Link>,
    pub joints: Vec<JointSpec>,
}

/// Scalar joint positions for the actuated (revolute, continuous, prismatic) joints,
/// in tree joint order. Radians for rotations, absolute lengths for translations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct JointState {
    pub values: Vec<f64>,
}

const LIMIT_SLACK: f64 = 1e-9;

impl ArticulationTree {
    pub fn new(root: impl Into<String>, links: Vec<Link>, joints: Vec<JointSpec>) -> Result<Self> {
        let tree = ArticulationTree {
            root: root.into(),
            links,
            joints,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Builds links by merging the named parts of `object`.
    pub fn from_object(
        object: &SegmentedObject,
        root: &str,
        link_parts: &[(String, Vec<String>)],
        joints: Vec<JointSpec>,
    ) -> Result<Self> {
        let links = link_parts
            .iter()
            .map(|(name, parts)| {
                let meshes = parts
                    .iter()
                    .map(|p| {
                        object
                            .part(p)
                            .map(|s| &s.mesh)
                            .ok_or_else(|| Error::InvalidTree(format!("link {name} names unknown part {p}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Link {
                    name: name.clone(),
                    parts: parts.clone(),
                    mesh: TriMesh::merge(meshes),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ArticulationTree::new(root, links, joints)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashMap::new();
        for (i, l) in self.links.iter().enumerate() {
            if names.insert(l.name.as_str(), i).is_some() {
                return Err(Error::InvalidTree(format!("duplicate link {}", l.name)));
            }
        }
        if !names.contains_key(self.root.as_str()) {
            return Err(Error::UnknownLink(self.root.clone()));
        }
        let mut parent_count = vec![0usize; self.links.len()];
        for j in &self.joints {
            j.check().map_err(Error::InvalidTree)?;
            if !names.contains_key(j.parent.as_str()) {
                return Err(Error::UnknownLink(j.parent.clone()));
            }
            let Some(&c) = names.get(j.child.as_str()) else {
                return Err(Error::UnknownLink(j.child.clone()));
            };
            parent_count[c] += 1;
        }
        for (i, l) in self.links.iter().enumerate() {
            let expected = usize::from(l.name != self.root);
            if parent_count[i] != expected {
                return Err(Error::InvalidTree(format!(
                    "link {} has {} parent joints, expected {expected}",
                    l.name, parent_count[i]
                )));
            }
        }
        if self.topological_order().len() != self.links.len() {
            return Err(Error::InvalidTree("links unreachable from root (cycle)".into()));
        }
        Ok(())
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Link indices, parents before children.
    pub fn topological_order(&self) -> Vec<usize> {
        let Some(root) = self.link_index(&self.root) else {
            return Vec::new();
        };
        let mut order = vec![root];
        let mut seen = vec![false; self.links.len()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(l) = queue.pop_front() {
            for j in &self.joints {
                if j.parent == self.links[l].name {
                    if let Some(c) = self.link_index(&j.child) {
                        if !seen[c] {
                            seen[c] = true;
                            order.push(c);
                            queue.push_back(c);
                        }
                    }
                }
            }
        }
        order
    }

    /// The link and every link below it.
    pub fn subtree(&self, link: &str) -> Vec<usize> {
        let Some(start) = self.link_index(link) else {
            return Vec::new();
        };
        let mut out = vec![start];
        let mut i = 0;
        while i < out.len() {
            let name = &self.links[out[i]].name;
            for j in &self.joints {
                if &j.parent == name {
                    if let Some(c) = self.link_index(&j.child) {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
            }
            i += 1;
        }
        out
    }

    /// Indices of joints that carry a scalar in `JointState`.
    pub fn actuated_joints(&self) -> Vec<usize> {
        (0..self.joints.len())
            .filter(|&j| self.joints[j].joint_type.is_actuated())
            .collect()
    }

    /// Allowed motion range in state units: radians for revolute, absolute length for prismatic.
    pub fn motion_range(&self, joint: usize) -> (f64, f64) {
        let j = &self.joints[joint];
        match j.joint_type {
            JointType::Revolute => {
                let [lo, hi] = j.limits.unwrap_or([0.0, 0.0]);
                (lo.to_radians(), hi.to_radians())
            }
            JointType::Continuous => (-std::f64::consts::TAU, std::f64::consts::TAU),
            JointType::Prismatic => {
                let [lo, hi] = j.limits.unwrap_or([0.0, 0.0]);
                let extent = self
                    .link(&j.child)
                    .map_or(1.0, |l| l.mesh.extent_along(&j.axis.direction));
                (lo * extent, hi * extent)
            }
            JointType::Fixed | JointType::Floating => (0.0, 0.0),
        }
    }

    pub fn check_state(&self, q: &JointState) -> Result<()> {
        let act = self.actuated_joints();
        if q.values.len() != act.len() {
            return Err(Error::InvalidJointState(format!(
                "expected {} values, got {}",
                act.len(),
                q.values.len()
            )));
        }
        for (&j, &v) in act.iter().zip(&q.values) {
            let (lo, hi) = self.motion_range(j);
            if !(v >= lo - LIMIT_SLACK && v <= hi + LIMIT_SLACK) {
                return Err(Error::InvalidJointState(format!(
                    "joint {} value {v} outside [{lo}, {hi}]",
                    self.joints[j].name
                )));
            }
        }
        Ok(())
    }

    /// Which link each part belongs to; parts not named by any link ride on the root.
    pub fn link_of_part(&self, part: &str) -> usize {
        self.links
            .iter()
            .position(|l| l.parts.iter().any(|p| p == part))
            .or_else(|| self.link_index(&self.root))
            .unwrap_or(0)
    }
}

/// Motion of one joint at scalar position `value`, in the parent's rest frame.
pub fn joint_motion(joint: &JointSpec, value: f64) -> Isometry3<f64> {
    match joint.joint_type {
        JointType::Revolute | JointType::Continuous => {
            let axis = Unit::new_normalize(joint.axis.direction);
            Isometry3::rotation_wrt_point(UnitQuaternion::from_axis_angle(&axis, value), joint.axis.origin)
        }
        JointType::Prismatic => Isometry3::from_parts(
            Translation3::from(joint.axis.direction * value),
            UnitQuaternion::identity(),
        ),
        JointType::Fixed | JointType::Floating => Isometry3::identity(),
    }
}

/// Per-link transforms for arbitrary joint values (one per joint in tree order,
/// ignored for fixed joints) without limit checks.
pub fn link_transforms_unchecked(
    tree: &ArticulationTree,
    per_joint: &[f64],
    floating: &HashMap<String, Isometry3<f64>>,
) -> Vec<Isometry3<f64>> {
    let mut out = vec![Isometry3::identity(); tree.links.len()];
    for l in tree.topological_order() {
        let name = &tree.links[l].name;
        let Some((ji, joint)) = tree.joints.iter().enumerate().find(|(_, j)| &j.child == name) else {
            continue;
        };
        let parent = tree.link_index(&joint.parent).expect("validated");
        let motion = match joint.joint_type {
            JointType::Floating => floating.get(&joint.name).copied().unwrap_or_else(Isometry3::identity),
            _ => joint_motion(joint, per_joint.get(ji).copied().unwrap_or(0.0)),
        };
        out[l] = out[parent] * motion;
    }
    out
}

fn per_joint_values(tree: &ArticulationTree, q: &JointState) -> Vec<f64> {
    let mut per_joint = vec![0.0; tree.joints.len()];
    for (&j, &v) in tree.actuated_joints().iter().zip(&q.values) {
        per_joint[j] = v;
    }
    per_joint
}

/// Rigid transform of every link (indexed like `tree.links`) at joint state `q`.
/// The root stays at identity; floating joints stay at rest.
pub fn forward_transform(tree: &ArticulationTree, q: &JointState) -> Result<Vec<Isometry3<f64>>> {
    forward_transform_with_floating(tree, q, &HashMap::new())
}

pub fn forward_transform_with_floating(
    tree: &ArticulationTree,
    q: &JointState,
    floating: &HashMap<String, Isometry3<f64>>,
) -> Result<Vec<Isometry3<f64>>> {
    tree.check_state(q)?;
    Ok(link_transforms_unchecked(tree, &per_joint_values(tree, q), floating))
}
