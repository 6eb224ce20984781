//! Synthetic articulated objects with exact ground truth: geometry, trees, mock-oracle
//! answers and evaluation records.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asset_io::{box_mesh, cylinder_mesh, labels_string, obj_string, Normalization, SampleOptions, SegmentedObject, TriMesh};
use crate::error::{Error, Result};
use crate::eval::{JointRecord, RecordFile};
use crate::geometry::Line;
use crate::joints::{JointSpec, JointType, Provenance};
use crate::kinematics::ArticulationTree;
use crate::oracle::{format_tree_block, HingeTopology, JointDecl, MockJoint, MockOracle, PartEntry, PrismaticClass, TreeDecl};

/// Candidates within this normalized distance of a true axis are "on" it for the mock oracle.
pub const MOCK_TOLERANCE: f64 = 0.02;

/// Point density used by fixture configs, in samples per normalized unit area.
pub const FIXTURE_DENSITY: f64 = 20_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureJoint {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    /// Source-frame axis; only the direction matters for prismatic joints.
    pub axis: Line,
    pub limit: Option<[f64; 2]>,
    pub topology: HingeTopology,
    pub prismatic: Option<PrismaticClass>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixturePart {
    pub name: String,
    pub description: String,
    pub mesh: TriMesh,
}

/// A generated object: one link per part, rooted at `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub object_name: String,
    pub parts: Vec<FixturePart>,
    pub root: String,
    pub joints: Vec<FixtureJoint>,
}

/// Everything about a fixture except its meshes, as stored next to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub name: String,
    pub object_name: String,
    pub parts: Vec<PartEntry>,
    pub root: String,
    pub joints: Vec<FixtureJoint>,
    pub tolerance: f64,
}

impl Fixture {
    pub fn tree_decl(&self) -> TreeDecl {
        self.truth().tree_decl()
    }

    pub fn truth(&self) -> FixtureTruth {
        FixtureTruth {
            name: self.name.clone(),
            object_name: self.object_name.clone(),
            parts: self
                .parts
                .iter()
                .map(|p| PartEntry {
                    name: p.name.clone(),
                    description: p.description.clone(),
                })
                .collect(),
            root: self.root.clone(),
            joints: self.joints.clone(),
            tolerance: MOCK_TOLERANCE,
        }
    }

    pub fn meshes(&self) -> Vec<(String, TriMesh)> {
        self.parts.iter().map(|p| (p.name.clone(), p.mesh.clone())).collect()
    }

    pub fn object(&self, opts: &SampleOptions) -> Result<SegmentedObject> {
        SegmentedObject::from_meshes(self.meshes(), opts, self.name.clone())
    }

    /// Ground-truth tree over a loaded copy of this fixture, one link per part.
    pub fn tree(&self, object: &SegmentedObject) -> Result<ArticulationTree> {
        let joints = self
            .truth()
            .normalized_axes(&object.normalization)
            .into_iter()
            .map(|(j, axis)| JointSpec {
                name: j.name.clone(),
                joint_type: j.joint_type,
                parent: j.parent.clone(),
                child: j.child.clone(),
                axis,
                limits: if j.joint_type.requires_limits() { j.limit } else { None },
                provenance: Provenance::default(),
            })
            .collect();
        let layout: Vec<_> = self.parts.iter().map(|p| (p.name.clone(), vec![p.name.clone()])).collect();
        ArticulationTree::from_object(object, &self.root, &layout, joints)
    }

    /// The normalization the loader will apply to this fixture.
    pub fn normalization(&self) -> Normalization {
        let aabb = crate::asset_io::Aabb::from_points(self.parts.iter().flat_map(|p| p.mesh.vertices.iter()))
            .expect("fixtures have vertices");
        Normalization::for_aabb(&aabb)
    }

    /// Writes `mesh.obj`, `labels.txt`, `tree.txt`, `truth.json`, `ground_truth.json` and
    /// `config.toml` into `dir`; returns the config path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| -> Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        let merged = TriMesh::merge(self.parts.iter().map(|p| &p.mesh));
        let labels: Vec<&str> = self
            .parts
            .iter()
            .flat_map(|p| std::iter::repeat(p.name.as_str()).take(p.mesh.faces.len()))
            .collect();
        write("mesh.obj", obj_string(&merged))?;
        write("labels.txt", labels_string(&labels))?;
        write("tree.txt", format_tree_block(&self.tree_decl()) + "\n")?;
        let truth = self.truth();
        write("truth.json", serde_json::to_string_pretty(&truth)? + "\n")?;
        write(
            "ground_truth.json",
            serde_json::to_string_pretty(&truth.records(&self.normalization()))? + "\n",
        )?;
        write("config.toml", self.config_toml())?;
        Ok(dir.join("config.toml"))
    }

    fn config_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[input]");
        let _ = writeln!(s, "mesh = \"mesh.obj\"");
        let _ = writeln!(s, "labels = \"labels.txt\"");
        let _ = writeln!(s, "object_name = \"{}\"", self.object_name);
        let _ = writeln!(s, "tree = \"tree.txt\"");
        let _ = writeln!(s, "truth = \"truth.json\"");
        let _ = writeln!(s, "\n[oracle]\nbackend = \"mock\"");
        let _ = writeln!(s, "\n[sampling]\ndensity = {FIXTURE_DENSITY:.1}");
        let _ = writeln!(s, "\n[run]\nout_dir = \"run\"");
        for j in &self.joints {
            let hint = match (j.joint_type, j.prismatic) {
                (JointType::Prismatic, Some(PrismaticClass::InOut)) => "prismatic = \"inout\"",
                (JointType::Prismatic, _) => "prismatic = \"surface\"",
                (t, _) if t.is_rotational() => match j.topology {
                    HingeTopology::BothOnSurface => "topology = \"both_on_surface\"",
                    HingeTopology::OneInside => "topology = \"one_inside\"",
                },
                _ => continue,
            };
            let _ = writeln!(s, "\n[joints.{}]\n{hint}", j.name);
        }
        s
    }
}

impl FixtureTruth {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn tree_decl(&self) -> TreeDecl {
        TreeDecl {
            parts: self.parts.clone(),
            links: self.parts.iter().map(|p| p.name.clone()).collect(),
            joints: self
                .joints
                .iter()
                .map(|j| JointDecl {
                    name: j.name.clone(),
                    joint_type: j.joint_type,
                    parent: j.parent.clone(),
                    child: j.child.clone(),
                    limit: j.limit,
                })
                .collect(),
        }
    }

    /// True axes mapped into the normalized frame.
    pub fn normalized_axes(&self, n: &Normalization) -> Vec<(&FixtureJoint, Line)> {
        self.joints
            .iter()
            .map(|j| (j, Line::new(n.apply(&j.axis.origin), j.axis.direction)))
            .collect()
    }

    pub fn mock_oracle(&self, n: &Normalization) -> MockOracle {
        let joints = self
            .normalized_axes(n)
            .into_iter()
            .filter(|(j, _)| j.joint_type.is_actuated())
            .map(|(j, axis)| MockJoint {
                child: j.child.clone(),
                joint_type: j.joint_type,
                axis,
                topology: j.topology,
                prismatic: j.prismatic,
                tolerance: self.tolerance,
            })
            .collect();
        MockOracle::new(&self.object_name, self.parts.clone(), Some(self.tree_decl()), joints)
    }

    /// Ground-truth records of the actuated joints, normalized, with the scale recorded.
    pub fn records(&self, n: &Normalization) -> RecordFile {
        RecordFile {
            normalization_scale: Some(n.scale),
            joints: self
                .normalized_axes(n)
                .into_iter()
                .filter(|(j, _)| j.joint_type.is_actuated())
                .map(|(j, axis)| JointRecord::from_line(&j.name, j.joint_type, &axis))
                .collect(),
        }
    }
}

fn part(name: &str, description: &str, mesh: TriMesh, rgb: [f64; 3]) -> FixturePart {
    FixturePart {
        name: name.into(),
        description: description.into(),
        mesh: mesh.with_uniform_color(rgb),
    }
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
    Point3::new(x, y, z)
}

/// Box with its lid standing open at 90° on the back edge, in front of a wall. The lid
/// touches the box only along the hinge line, and the wall (part of the fixed base) hides
/// the lid's back face so the hinge corner faces the best view of the lid.
pub fn hinged_box(seed: u64) -> Fixture {
    let mut r = rng(seed, 0x1);
    let w = r.gen_range(0.8..1.2);
    let d = r.gen_range(0.6..0.9);
    let h = r.gen_range(0.35..0.6);
    let t = r.gen_range(0.03..0.05);
    let gap = 0.3 * w;
    let body = box_mesh(p(0.0, 0.0, -h), p(w, d, 0.0));
    let wall = box_mesh(p(-t - gap - 0.05, -0.1, -h), p(-t - gap, d + 0.1, w + 0.1));
    Fixture {
        name: "hinged_box".into(),
        object_name: "box".into(),
        parts: vec![
            part("base", "the body of the box against a wall, does not move", TriMesh::merge([&body, &wall]), [0.80, 0.62, 0.40]),
            part("lid", "the lid, rotates about the hinge at the back edge", box_mesh(p(-t, 0.0, 0.0), p(0.0, d, w)), [0.55, 0.70, 0.85]),
        ],
        root: "base".into(),
        joints: vec![FixtureJoint {
            name: "lid_hinge".into(),
            joint_type: JointType::Revolute,
            parent: "base".into(),
            child: "lid".into(),
            axis: Line::new(p(0.0, 0.5 * d, 0.0), Vector3::y()),
            limit: Some([0.0, 90.0]),
            topology: HingeTopology::BothOnSurface,
            prismatic: None,
        }],
    }
}

/// Cabinet with a drawer front resting on its front face.
pub fn drawer_cabinet(seed: u64) -> Fixture {
    let mut r = rng(seed, 0x2);
    let w = r.gen_range(0.5..0.7);
    let d = r.gen_range(0.7..1.0);
    let h = r.gen_range(0.6..0.9);
    let t = r.gen_range(0.05..0.08);
    let (y0, y1, z0, z1) = (0.1 * d, 0.9 * d, 0.55 * h, 0.9 * h);
    Fixture {
        name: "drawer_cabinet".into(),
        object_name: "cabinet".into(),
        parts: vec![
            part("cabinet", "the cabinet body, does not move", box_mesh(p(0.0, 0.0, 0.0), p(w, d, h)), [0.75, 0.75, 0.70]),
            part("drawer", "the drawer, slides out of the cabinet", box_mesh(p(w, y0, z0), p(w + t, y1, z1)), [0.85, 0.55, 0.35]),
        ],
        root: "cabinet".into(),
        joints: vec![FixtureJoint {
            name: "drawer_slide".into(),
            joint_type: JointType::Prismatic,
            parent: "cabinet".into(),
            child: "drawer".into(),
            axis: Line::new(p(w + 0.5 * t, 0.5 * (y0 + y1), 0.5 * (z0 + z1)), Vector3::x()),
            limit: Some([0.0, 1.0]),
            topology: HingeTopology::BothOnSurface,
            prismatic: Some(PrismaticClass::InOut),
        }],
    }
}

/// Wall with a window pane that slides horizontally along its front face.
pub fn sliding_window(seed: u64) -> Fixture {
    let mut r = rng(seed, 0x3);
    let ww = r.gen_range(1.2..1.6);
    let th = r.gen_range(0.08..0.12);
    let hw = r.gen_range(0.9..1.2);
    let tp = r.gen_range(0.02..0.04);
    let (x0, x1, z0, z1) = (-0.45 * ww, -0.05 * ww, 0.25 * hw, 0.85 * hw);
    Fixture {
        name: "sliding_window".into(),
        object_name: "window".into(),
        parts: vec![
            part("wall", "the wall holding the window, does not move", box_mesh(p(-0.5 * ww, 0.0, 0.0), p(0.5 * ww, th, hw)), [0.80, 0.80, 0.78]),
            part("pane", "the window pane, slides sideways", box_mesh(p(x0, -tp, z0), p(x1, 0.0, z1)), [0.45, 0.65, 0.90]),
        ],
        root: "wall".into(),
        joints: vec![FixtureJoint {
            name: "pane_slide".into(),
            joint_type: JointType::Prismatic,
            parent: "wall".into(),
            child: "pane".into(),
            axis: Line::new(p(0.5 * (x0 + x1), -0.5 * tp, 0.5 * (z0 + z1)), Vector3::x()),
            limit: Some([0.0, 1.0]),
            topology: HingeTopology::BothOnSurface,
            prismatic: Some(PrismaticClass::Surface),
        }],
    }
}

/// Round knob mounted on the front face (y = 0) of a square plate.
pub fn knob_panel(seed: u64) -> Fixture {
    let mut r = rng(seed, 0x4);
    let half = r.gen_range(0.4..0.6);
    let tp = r.gen_range(0.04..0.08);
    let radius = r.gen_range(0.08..0.12);
    let height = r.gen_range(0.06..0.1);
    let (cx, cz) = (r.gen_range(-0.15..0.15), r.gen_range(-0.15..0.15));
    Fixture {
        name: "knob_panel".into(),
        object_name: "control panel".into(),
        parts: vec![
            part("panel", "the mounting plate, does not move", box_mesh(p(-half, 0.0, -half), p(half, tp, half)), [0.70, 0.72, 0.75]),
            part("knob", "the knob, turns about its center", cylinder_mesh(p(cx, 0.0, cz), -Vector3::y(), radius, height, 48), [0.90, 0.35, 0.30]),
        ],
        root: "panel".into(),
        joints: vec![FixtureJoint {
            name: "knob_turn".into(),
            joint_type: JointType::Revolute,
            parent: "panel".into(),
            child: "knob".into(),
            axis: Line::new(p(cx, 0.0, cz), Vector3::y()),
            limit: Some([0.0, 270.0]),
            topology: HingeTopology::OneInside,
            prismatic: None,
        }],
    }
}

/// Cart body with one wheel on its side face (y = 0), spinning freely.
pub fn spinning_wheel(seed: u64) -> Fixture {
    let mut r = rng(seed, 0x5);
    let len = r.gen_range(1.0..1.4);
    let width = r.gen_range(0.4..0.6);
    let height = r.gen_range(0.3..0.5);
    let radius = r.gen_range(0.18..0.25);
    let tread = r.gen_range(0.06..0.1);
    let (cx, cz) = (0.25 * len, 0.5 * height);
    Fixture {
        name: "spinning_wheel".into(),
        object_name: "cart".into(),
        parts: vec![
            part("body", "the cart body, does not move", box_mesh(p(-0.5 * len, 0.0, 0.0), p(0.5 * len, width, height)), [0.60, 0.75, 0.55]),
            part("wheel", "the wheel, spins freely on its axle", cylinder_mesh(p(cx, 0.0, cz), -Vector3::y(), radius, tread, 48), [0.25, 0.25, 0.28]),
        ],
        root: "body".into(),
        joints: vec![FixtureJoint {
            name: "wheel_spin".into(),
            joint_type: JointType::Continuous,
            parent: "body".into(),
            child: "wheel".into(),
            axis: Line::new(p(cx, 0.0, cz), Vector3::y()),
            limit: None,
            topology: HingeTopology::OneInside,
            prismatic: None,
        }],
    }
}

/// The five-object corpus: hinged box, drawer cabinet, sliding window, knob panel, wheel.
pub fn corpus(seed: u64) -> Vec<Fixture> {
    vec![
        hinged_box(seed),
        drawer_cabinet(seed),
        sliding_window(seed),
        knob_panel(seed),
        spinning_wheel(seed),
    ]
}

/// Solid box with a closed flat lid hinged along its top back edge (x = 0, z = 0) and a
/// wall behind it that stops the opening lid.
pub fn lid_box(seed: u64) -> Fixture {
    let mut r = rng(seed, 0x6);
    let w = r.gen_range(0.6..0.8);
    let d = r.gen_range(0.5..0.7);
    let h = r.gen_range(0.3..0.45);
    let t = r.gen_range(0.03..0.05);
    let gap = r.gen_range(0.3..0.45);
    Fixture {
        name: "lid_box".into(),
        object_name: "box".into(),
        parts: vec![
            part("base", "the body of the box, does not move", box_mesh(p(0.0, 0.0, -h), p(w, d, 0.0)), [0.80, 0.62, 0.40]),
            part("lid", "the lid, opens backwards", box_mesh(p(0.0, 0.0, 0.0), p(w, d, t)), [0.55, 0.70, 0.85]),
            part("stop", "a wall behind the box", box_mesh(p(-gap - 0.05, -0.1, -h), p(-gap, d + 0.1, w + 0.2)), [0.70, 0.70, 0.70]),
        ],
        root: "base".into(),
        joints: vec![
            FixtureJoint {
                name: "lid_hinge".into(),
                joint_type: JointType::Revolute,
                parent: "base".into(),
                child: "lid".into(),
                axis: Line::new(p(0.0, 0.5 * d, 0.0), Vector3::y()),
                limit: Some([0.0, 180.0]),
                topology: HingeTopology::BothOnSurface,
                prismatic: None,
            },
            FixtureJoint {
                name: "stop_mount".into(),
                joint_type: JointType::Fixed,
                parent: "base".into(),
                child: "stop".into(),
                axis: Line::new(p(-gap, 0.5 * d, 0.0), Vector3::z()),
                limit: None,
                topology: HingeTopology::BothOnSurface,
                prismatic: None,
            },
        ],
    }
}

fn square(z: f64, x0: f64, side: f64) -> TriMesh {
    TriMesh::new(
        vec![p(x0, 0.0, z), p(x0 + side, 0.0, z), p(x0 + side, side, z), p(x0, side, z)],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}

fn plate_pair(name: &str, a: TriMesh, b: TriMesh) -> Fixture {
    Fixture {
        name: name.into(),
        object_name: "plates".into(),
        parts: vec![part("a", "lower plate", a, [0.8; 3]), part("b", "upper plate", b, [0.6; 3])],
        root: "a".into(),
        joints: vec![FixtureJoint {
            name: "plates_fixed".into(),
            joint_type: JointType::Fixed,
            parent: "a".into(),
            child: "b".into(),
            axis: Line::new(Point3::origin(), Vector3::z()),
            limit: None,
            topology: HingeTopology::BothOnSurface,
            prismatic: None,
        }],
    }
}

/// Two parallel squares whose gap is `gap` after normalization to unit diagonal.
pub fn gap_plates(gap: f64) -> Fixture {
    // diagonal² = 2·side² + 1 for a unit source gap
    let side = ((1.0 / (gap * gap) - 1.0) / 2.0).sqrt();
    plate_pair("gap_plates", square(0.0, 0.0, side), square(1.0, 0.0, side))
}

/// Two unit squares ten of their diagonals apart.
pub fn distant_plates() -> Fixture {
    let gap = 10.0 * 2f64.sqrt();
    plate_pair("distant_plates", square(0.0, 0.0, 1.0), square(0.0, 1.0 + gap, 1.0))
}

/// Writes the five-object corpus under `out_dir/<fixture>/`; returns the config paths.
pub fn write_corpus(out_dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    corpus(seed).iter().map(|f| f.write(&out_dir.join(&f.name))).collect()
}
