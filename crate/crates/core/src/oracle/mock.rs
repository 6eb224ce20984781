use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::parse::{HingeExpectation, HingeTopology, PartEntry, PrismaticClass, TreeDecl};
use super::{PromptRequest, Purpose};
use crate::error::{Error, Result};
use crate::geometry::Line;
use crate::joints::JointType;

/// Ground truth for one joint, keyed by the child link named in prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockJoint {
    pub child: String,
    pub joint_type: JointType,
    pub axis: Line,
    pub topology: HingeTopology,
    pub prismatic: Option<PrismaticClass>,
    /// Candidates within this distance of the true axis count as on it.
    pub tolerance: f64,
}

/// Answers prompts from known geometry, or from a fixed queue of replies.
#[derive(Debug, Default)]
pub struct MockOracle {
    pub object_name: String,
    pub parts: Vec<PartEntry>,
    pub tree: Option<TreeDecl>,
    pub joints: Vec<MockJoint>,
    script: Option<Mutex<VecDeque<String>>>,
}

pub fn format_tree_block(tree: &TreeDecl) -> String {
    let mut s = String::from("```articulation tree\nparts:\n");
    for (i, p) in tree.parts.iter().enumerate() {
        let _ = writeln!(s, "({}) part_name: {};", i + 1, p.name);
    }
    s.push_str("\nlinks:\n");
    for (i, l) in tree.links.iter().enumerate() {
        let _ = writeln!(s, "({}) link_name: {};", i + 1, l);
    }
    s.push_str("\njoints:\n");
    for (i, j) in tree.joints.iter().enumerate() {
        let limit = match j.limit {
            Some([lo, hi]) => format!("[{lo}, {hi}]"),
            None => "None".into(),
        };
        let _ = writeln!(
            s,
            "({}) joint_name: {}; joint_type: {}; parent_link: {}; child_link: {}; joint_limit: {};",
            i + 1,
            j.name,
            j.joint_type,
            j.parent,
            j.child,
            limit
        );
    }
    s.push_str("```");
    s
}

impl MockOracle {
    pub fn new(object_name: &str, parts: Vec<PartEntry>, tree: Option<TreeDecl>, joints: Vec<MockJoint>) -> Self {
        MockOracle {
            object_name: object_name.to_string(),
            parts,
            tree,
            joints,
            script: None,
        }
    }

    /// Replies with `replies` in order regardless of the request.
    pub fn scripted(replies: Vec<String>) -> Self {
        MockOracle {
            script: Some(Mutex::new(replies.into())),
            ..Default::default()
        }
    }

    fn joint(&self, request: &PromptRequest) -> Result<&MockJoint> {
        let part = request.context.part_name.as_deref().unwrap_or_default();
        self.joints
            .iter()
            .find(|j| j.child == part)
            .ok_or_else(|| Error::Config(format!("mock oracle knows no joint for part {part:?}")))
    }

    pub fn answer(&self, request: &PromptRequest) -> Result<String> {
        if let Some(script) = &self.script {
            return script.lock().expect("script lock").pop_front().ok_or(Error::OracleTransport {
                attempts: 1,
                message: "scripted replies exhausted".into(),
            });
        }
        match request.purpose {
            Purpose::PartList => {
                let mut s = String::from("```part_list\n");
                for (i, p) in self.parts.iter().enumerate() {
                    let _ = writeln!(s, "({}) part_name: {}; description: {}", i + 1, p.name, p.description);
                }
                s.push_str("```");
                Ok(s)
            }
            Purpose::ArticulationTree => self
                .tree
                .as_ref()
                .map(format_tree_block)
                .ok_or_else(|| Error::Config("mock oracle has no articulation tree".into())),
            Purpose::HingeTopology => {
                let j = self.joint(request)?;
                let choice = match j.topology {
                    HingeTopology::BothOnSurface => "(1)",
                    HingeTopology::OneInside => "(2)",
                };
                Ok(format!("```hinge_info\ndescription: hinge of the {}\nchoice: {choice}\n```", j.child))
            }
            Purpose::PrismaticClass => {
                let j = self.joint(request)?;
                let choice = match j.prismatic {
                    Some(PrismaticClass::Surface) => "surface",
                    _ => "outward/inward",
                };
                Ok(format!(
                    "```translation_axis_info\ndescription: translation of the {}\nchoice: {choice}\n```",
                    j.child
                ))
            }
            Purpose::HingePoints => {
                let j = self.joint(request)?;
                let mut ranked: Vec<(f64, u32)> = request
                    .images
                    .iter()
                    .filter_map(|i| i.manifest.as_ref())
                    .flat_map(|m| m.candidates.iter())
                    .map(|c| (j.axis.distance_to_point(&c.point), c.id))
                    .collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let ids: Vec<u32> = match request.context.hinge {
                    HingeExpectation::ExactlyOne => ranked.iter().take(1).map(|r| r.1).collect(),
                    HingeExpectation::AtLeastTwo => {
                        let close = ranked.iter().filter(|r| r.0 <= j.tolerance).count();
                        let mut ids: Vec<u32> = ranked.iter().take(close.max(2)).map(|r| r.1).collect();
                        ids.sort_unstable();
                        ids
                    }
                };
                let list = ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ");
                Ok(format!(
                    "```hinge points\ndescription: points along the hinge of the {}\nselected IDs: {list}\n```",
                    j.child
                ))
            }
            Purpose::SlidingArrow => {
                let j = self.joint(request)?;
                let best = request
                    .images
                    .iter()
                    .filter_map(|i| i.manifest.as_ref())
                    .flat_map(|m| m.arrows.iter())
                    .map(|a| (a.direction.dot(&j.axis.direction).abs(), a.color))
                    .fold(None::<(f64, _)>, |best, cur| match best {
                        Some(b) if b.0 >= cur.0 => Some(b),
                        _ => Some(cur),
                    })
                    .ok_or_else(|| Error::Config("sliding prompt carries no arrows".into()))?;
                Ok(format!(
                    "```sliding direction\ndescription: the {} slides along this arrow\nselected arrow: {}\n```",
                    j.child, best.1
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::{Point3, Vector3};

    use super::*;
    use crate::oracle::{build_prompt, parse_articulation_tree, parse_hinge_points, PromptContext, PromptImage};
    use crate::viewprompt::{Camera, ImageManifest, ManifestCandidate};

    fn manifest(points: &[Point3<f64>]) -> ImageManifest {
        ImageManifest {
            image: "x.png".into(),
            camera: Camera::new(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y(), 45.0, (8, 8)).unwrap(),
            candidates: points
                .iter()
                .enumerate()
                .map(|(i, p)| ManifestCandidate {
                    id: i as u32 + 1,
                    point: *p,
                    pixel: [0.0, 0.0],
                })
                .collect(),
            arrows: Vec::new(),
        }
    }

    fn oracle() -> MockOracle {
        MockOracle::new(
            "box",
            Vec::new(),
            None,
            vec![MockJoint {
                child: "lid".into(),
                joint_type: JointType::Revolute,
                axis: Line::new(Point3::new(0.0, -0.2, 0.1), Vector3::x()),
                topology: HingeTopology::BothOnSurface,
                prismatic: None,
                tolerance: 0.01,
            }],
        )
    }

    #[test]
    fn picks_candidates_on_the_hinge() {
        let pts = [
            Point3::new(0.0, 0.1, 0.1),
            Point3::new(-0.2, -0.2, 0.101),
            Point3::new(0.3, 0.2, 0.0),
            Point3::new(0.25, -0.199, 0.1),
        ];
        let req = build_prompt(Purpose::HingePoints, &PromptContext::for_part("box", "lid"))
            .unwrap()
            .with_image(PromptImage::from_png("x.png", vec![0], Some(manifest(&pts))));
        let reply = oracle().answer(&req).unwrap();
        assert_eq!(parse_hinge_points(&reply, HingeExpectation::AtLeastTwo).unwrap(), vec![2, 4]);
    }

    #[test]
    fn tree_block_round_trips() {
        let text = "```articulation tree\nparts:\n(1) part_name: base;\n(2) part_name: lid;\n\nlinks:\n(1) link_name: base;\n(2) link_name: lid;\n\njoints:\n(1) joint_name: hinge; joint_type: revolute; parent_link: base; child_link: lid; joint_limit: [0, 110];\n```";
        let tree = parse_articulation_tree(text).unwrap();
        assert_eq!(parse_articulation_tree(&format_tree_block(&tree)).unwrap(), tree);
    }
}
