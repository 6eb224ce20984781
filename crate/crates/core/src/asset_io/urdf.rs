use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::Normalization;
use super::obj::write_obj;
use crate::error::{Error, Result};
use crate::geometry::Line;
use crate::joints::JointType;
use crate::kinematics::ArticulationTree;

/// Files written by `export_urdf`, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub urdf: String,
    pub meshes: Vec<String>,
    /// Source-to-normalized mapping; URDF coordinates are normalized units.
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrdfJoint {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    /// Joint frame origin in the parent link frame.
    pub origin: [f64; 3],
    pub axis: Option<[f64; 3]>,
    /// Radians or meters as written.
    pub limit: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrdfRobot {
    pub name: String,
    pub links: Vec<String>,
    pub joints: Vec<UrdfJoint>,
}

impl UrdfRobot {
    /// Origin of a link frame in the root frame. Joint frames carry no rotation, so this is
    /// the sum of joint origins along the chain.
    pub fn link_origin(&self, link: &str) -> Point3<f64> {
        let mut p = Vector3::zeros();
        let mut current = link;
        let mut guard = 0;
        while let Some(j) = self.joints.iter().find(|j| j.child == current) {
            p += Vector3::from(j.origin);
            current = &j.parent;
            guard += 1;
            if guard > self.joints.len() {
                break;
            }
        }
        Point3::from(p)
    }

    /// Joint axis as a line in the root frame.
    pub fn axis_line(&self, joint: &str) -> Option<Line> {
        let j = self.joints.iter().find(|j| j.name == joint)?;
        let axis = j.axis?;
        let origin = self.link_origin(&j.child);
        Some(Line::new(origin, Vector3::from(axis)))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn vec3(v: &Vector3<f64>) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

/// Writes `robot.urdf`, one OBJ per link under `meshes/` and `manifest.json`.
///
/// Each child link frame sits at its joint's axis origin with the world orientation;
/// revolute limits go out in radians, prismatic limits in absolute lengths.
pub fn export_urdf(tree: &ArticulationTree, normalization: &Normalization, out_dir: &Path) -> Result<ExportManifest> {
    tree.validate()?;
    let mesh_dir = out_dir.join("meshes");
    std::fs::create_dir_all(&mesh_dir).map_err(|e| Error::io(&mesh_dir, e))?;

    let mut frame: HashMap<&str, Point3<f64>> = HashMap::new();
    frame.insert(tree.root.as_str(), Point3::origin());
    for &l in &tree.topological_order() {
        let name = tree.links[l].name.as_str();
        if let Some(j) = tree.joints.iter().find(|j| j.child == name) {
            let origin = if j.joint_type.is_actuated() { j.axis.origin } else { frame[j.parent.as_str()] };
            frame.insert(name, origin);
        }
    }

    let robot = tree.root.clone();
    let mut xml = String::new();
    let _ = writeln!(xml, "<?xml version=\"1.0\"?>");
    let _ = writeln!(xml, "<robot name=\"{}\">", escape(&robot));
    let mut meshes = Vec::new();
    for link in &tree.links {
        let rel = format!("meshes/{}.obj", file_stem(&link.name));
        let o = frame[link.name.as_str()];
        let local = link.mesh.map_points(|p| Point3::from(p - o));
        write_obj(&local, &out_dir.join(&rel))?;
        let _ = writeln!(xml, "  <link name=\"{}\">", escape(&link.name));
        for tag in ["visual", "collision"] {
            let _ = writeln!(xml, "    <{tag}>");
            let _ = writeln!(xml, "      <origin xyz=\"0 0 0\" rpy=\"0 0 0\"/>");
            let _ = writeln!(xml, "      <geometry><mesh filename=\"{rel}\"/></geometry>");
            let _ = writeln!(xml, "    </{tag}>");
        }
        let _ = writeln!(xml, "  </link>");
        meshes.push(rel);
    }
    for j in &tree.joints {
        let origin = frame[j.child.as_str()] - frame[j.parent.as_str()];
        let _ = writeln!(xml, "  <joint name=\"{}\" type=\"{}\">", escape(&j.name), j.joint_type);
        let _ = writeln!(xml, "    <parent link=\"{}\"/>", escape(&j.parent));
        let _ = writeln!(xml, "    <child link=\"{}\"/>", escape(&j.child));
        let _ = writeln!(xml, "    <origin xyz=\"{}\" rpy=\"0 0 0\"/>", vec3(&origin));
        if j.joint_type.is_actuated() {
            let _ = writeln!(xml, "    <axis xyz=\"{}\"/>", vec3(&j.axis.direction));
        }
        if j.joint_type.requires_limits() {
            let ji = tree.joint_index(&j.name).expect("own joint");
            let (lo, hi) = tree.motion_range(ji);
            let _ = writeln!(
                xml,
                "    <limit lower=\"{lo}\" upper=\"{hi}\" effort=\"10\" velocity=\"1\"/>"
            );
        }
        let _ = writeln!(xml, "  </joint>");
    }
    let _ = writeln!(xml, "</robot>");

    let urdf_path = out_dir.join("robot.urdf");
    std::fs::write(&urdf_path, xml).map_err(|e| Error::io(&urdf_path, e))?;
    let manifest = ExportManifest {
        urdf: "robot.urdf".into(),
        meshes,
        normalization: *normalization,
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|x| x.parse::<f64>().map_err(|_| Error::Urdf(format!("bad number {x:?}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| Error::Urdf(format!("expected three numbers in {s:?}")))
}

fn attr<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str> {
    node.attribute(name)
        .ok_or_else(|| Error::Urdf(format!("<{}> lacks attribute {name}", node.tag_name().name())))
}

pub fn parse_urdf(text: &str) -> Result<UrdfRobot> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Urdf(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "robot" {
        return Err(Error::Urdf("root element is not <robot>".into()));
    }
    let name = root.attribute("name").unwrap_or_default().to_string();
    let mut links = Vec::new();
    let mut joints = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => links.push(attr(node, "name")?.to_string()),
            "joint" => {
                let jt = attr(node, "type")?;
                let joint_type = JointType::parse(jt).ok_or_else(|| Error::Urdf(format!("unknown joint type {jt}")))?;
                let child_el = |tag: &str| node.children().find(|c| c.has_tag_name(tag));
                let parent = child_el("parent")
                    .ok_or_else(|| Error::Urdf("joint without <parent>".into()))
                    .and_then(|n| attr(n, "link"))?;
                let child = child_el("child")
                    .ok_or_else(|| Error::Urdf("joint without <child>".into()))
                    .and_then(|n| attr(n, "link"))?;
                let origin = match child_el("origin").and_then(|n| n.attribute("xyz")) {
                    Some(s) => parse_triple(s)?,
                    None => [0.0; 3],
                };
                let axis = child_el("axis").map(|n| attr(n, "xyz").and_then(parse_triple)).transpose()?;
                let limit = child_el("limit")
                    .map(|n| -> Result<[f64; 2]> {
                        let num = |k: &str| {
                            attr(n, k)?
                                .trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Urdf(format!("bad limit {k}")))
                        };
                        Ok([num("lower")?, num("upper")?])
                    })
                    .transpose()?;
                joints.push(UrdfJoint {
                    name: attr(node, "name")?.to_string(),
                    joint_type,
                    parent: parent.to_string(),
                    child: child.to_string(),
                    origin,
                    axis,
                    limit,
                });
            }
            _ => {}
        }
    }
    for j in &joints {
        for l in [&j.parent, &j.child] {
            if !links.contains(l) {
                return Err(Error::UnknownLink(l.clone()));
            }
        }
    }
    Ok(UrdfRobot { name, links, joints })
}

pub fn read_urdf(path: &Path) -> Result<UrdfRobot> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    parse_urdf(&text)
}
