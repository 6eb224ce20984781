//! Mesh + part-label ingestion, per-part surface sampling, normalization and URDF export.

mod mesh;
mod obj;
mod sampling;
mod urdf;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use mesh::{box_mesh, cylinder_mesh, Aabb, Normalization, TriMesh};
pub use obj::{labels_string, obj_string, parse_labels, parse_obj, read_obj, write_obj, ObjData};
pub use sampling::{sample_mesh, PartCloud};
pub use urdf::{export_urdf, parse_urdf, read_urdf, ExportManifest, UrdfJoint, UrdfRobot};

use crate::error::{Error, Result};

/// One labeled part: its triangles and a surface sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSegment {
    pub name: String,
    pub mesh: TriMesh,
    pub cloud: PartCloud,
}

/// A normalized, part-segmented object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedObject {
    pub parts: Vec<PartSegment>,
    /// Maps source coordinates into the normalized frame.
    pub normalization: Normalization,
    pub source_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleOptions {
    pub samples_per_part: usize,
    pub seed: u64,
    /// Gaussian position noise added after sampling, in normalized units.
    pub noise_sigma: f64,
    /// When set, each part gets `density × area` samples (at least 64) instead of
    /// `samples_per_part`, so neighboring parts are sampled equally densely.
    pub density: Option<f64>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            samples_per_part: 4096,
            seed: 0,
            noise_sigma: 0.0,
            density: None,
        }
    }
}

/// Samples `n` points on a part surface; deterministic in `seed`.
pub fn sample_part_cloud(part: &PartSegment, n: usize, seed: u64) -> Result<PartCloud> {
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    sample_mesh(&part.mesh, n, seed).map_err(|e| match e {
        Error::DegeneratePart(_) => Error::DegeneratePart(part.name.clone()),
        other => other,
    })
}

/// Loads an OBJ mesh and its sidecar label file with default sampling options.
pub fn load_segmented_mesh(mesh_path: &Path, labels_path: &Path) -> Result<SegmentedObject> {
    load_segmented_mesh_with(mesh_path, labels_path, &SampleOptions::default())
}

pub fn load_segmented_mesh_with(
    mesh_path: &Path,
    labels_path: &Path,
    opts: &SampleOptions,
) -> Result<SegmentedObject> {
    let data = read_obj(mesh_path)?;
    let text = std::fs::read_to_string(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let labels = parse_labels(&text);
    if labels.len() != data.face_lines {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            faces: data.face_lines,
        });
    }
    let parts = split_by_label(&data, &labels)?;
    SegmentedObject::from_meshes(parts, opts, mesh_path.display().to_string())
}

/// Groups triangles by label in order of first appearance and compacts vertices per part.
fn split_by_label(data: &ObjData, labels: &[String]) -> Result<Vec<(String, TriMesh)>> {
    let mut order: Vec<String> = Vec::new();
    let mut faces: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (tri, &line) in data.source_face.iter().enumerate() {
        let name = &labels[line];
        if !faces.contains_key(name) {
            order.push(name.clone());
        }
        faces.entry(name.clone()).or_default().push(tri);
    }
    // labels attached to no triangle can only come from an inconsistent file
    for l in labels {
        if !faces.contains_key(l) {
            return Err(Error::EmptyPart(l.clone()));
        }
    }
    Ok(order
        .into_iter()
        .map(|name| {
            let tris = &faces[&name];
            let mesh = submesh(&data.mesh, tris);
            (name, mesh)
        })
        .collect())
}

fn submesh(mesh: &TriMesh, tris: &[usize]) -> TriMesh {
    let mut remap = vec![usize::MAX; mesh.vertices.len()];
    let mut out = TriMesh::default();
    let mut colors = Vec::new();
    for &t in tris {
        let mut face = [0; 3];
        for (k, &v) in mesh.faces[t].iter().enumerate() {
            if remap[v] == usize::MAX {
                remap[v] = out.vertices.len();
                out.vertices.push(mesh.vertices[v]);
                colors.push(mesh.vertex_color(v));
            }
            face[k] = remap[v];
        }
        out.faces.push(face);
    }
    if mesh.colors.is_some() {
        out.colors = Some(colors);
    }
    out
}

impl SegmentedObject {
    /// Normalizes the given part meshes jointly and samples a cloud for each.
    pub fn from_meshes(
        parts: Vec<(String, TriMesh)>,
        opts: &SampleOptions,
        source_path: String,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (name, mesh) in &parts {
            if name.trim().is_empty() {
                return Err(Error::EmptyPart("<unnamed>".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidTree(format!("duplicate part name {name}")));
            }
            if mesh.is_empty() {
                return Err(Error::EmptyPart(name.clone()));
            }
        }
        let aabb = Aabb::from_points(parts.iter().flat_map(|(_, m)| m.vertices.iter()))
            .ok_or(Error::EmptyCloud)?;
        let normalization = Normalization::for_aabb(&aabb);
        let mut segments = Vec::with_capacity(parts.len());
        for (i, (name, mesh)) in parts.into_iter().enumerate() {
            let mesh = mesh.map_points(|p| normalization.apply(p));
            let mut part = PartSegment {
                name,
                mesh,
                cloud: PartCloud::default(),
            };
            let seed = opts.seed.wrapping_add(i as u64);
            let n = match opts.density {
                Some(d) => ((d * part.mesh.total_area()).round() as usize).max(64),
                None => opts.samples_per_part,
            };
            part.cloud = sample_part_cloud(&part, n, seed)?
                .jittered(opts.noise_sigma, seed ^ 0x5EED_0F_A015E);
            segments.push(part);
        }
        Ok(SegmentedObject {
            parts: segments,
            normalization,
            source_path,
        })
    }

    pub fn part(&self, name: &str) -> Option<&PartSegment> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn part_index(&self, name: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.name == name)
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(self.parts.iter().flat_map(|p| p.mesh.vertices.iter()))
    }

    pub fn merged_mesh(&self) -> TriMesh {
        TriMesh::merge(self.parts.iter().map(|p| &p.mesh))
    }

    /// Re-centers and rescales to unit bounding-box diagonal, transforming meshes and clouds alike.
    pub fn normalized(&self) -> SegmentedObject {
        let Some(aabb) = self.aabb() else {
            return self.clone();
        };
        let n = Normalization::for_aabb(&aabb);
        let parts = self
            .parts
            .iter()
            .map(|p| PartSegment {
                name: p.name.clone(),
                mesh: p.mesh.map_points(|v| n.apply(v)),
                cloud: PartCloud {
                    points: p.cloud.points.iter().map(|v| n.apply(v)).collect(),
                    ..p.cloud.clone()
                },
            })
            .collect();
        SegmentedObject {
            parts,
            normalization: n.compose(&self.normalization),
            source_path: self.source_path.clone(),
        }
    }

    /// Writes the object back out as one OBJ plus its label file.
    pub fn write_obj_with_labels(&self, mesh_path: &Path, labels_path: &Path) -> Result<()> {
        let mesh = self.merged_mesh();
        write_obj(&mesh, mesh_path)?;
        let labels: Vec<&str> = self
            .parts
            .iter()
            .flat_map(|p| std::iter::repeat(p.name.as_str()).take(p.mesh.faces.len()))
            .collect();
        std::fs::write(labels_path, labels_string(&labels)).map_err(|e| Error::io(labels_path, e))
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::Point3;

    use super::*;

    fn write_fixture(dir: &Path, obj: &str, labels: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let m = dir.join("m.obj");
        let l = dir.join("m.labels");
        std::fs::write(&m, obj).unwrap();
        std::fs::write(&l, labels).unwrap();
        (m, l)
    }

    fn two_boxes() -> (String, Vec<&'static str>) {
        let a = box_mesh(Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 2.0, 1.0));
        let b = box_mesh(Point3::new(0.0, 0.0, 1.0), Point3::new(2.0, 2.0, 1.2));
        let merged = TriMesh::merge([&a, &b]);
        let mut labels = vec!["base"; 12];
        labels.extend(vec!["lid"; 12]);
        (obj_string(&merged), labels)
    }

    #[test]
    fn single_cube_normalizes_to_unit_diagonal() {
        let dir = tempfile::tempdir().unwrap();
        let cube = box_mesh(Point3::new(3.0, 3.0, 3.0), Point3::new(5.0, 5.0, 5.0));
        let (m, l) = write_fixture(dir.path(), &obj_string(&cube), &labels_string(&["body"; 12]));
        let obj = load_segmented_mesh(&m, &l).unwrap();
        assert_eq!(obj.parts.len(), 1);
        let aabb = obj.aabb().unwrap();
        assert!((aabb.diagonal() - 1.0).abs() < 1e-12);
        assert!(aabb.center().coords.norm() < 1e-12);
        let back = obj.normalization.invert(&obj.parts[0].mesh.vertices[0]);
        assert!((back - cube.vertices[0]).norm() < 1e-12);
    }

    #[test]
    fn two_part_face_partition_is_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let (obj_text, labels) = two_boxes();
        let (m, l) = write_fixture(dir.path(), &obj_text, &labels_string(&labels));
        let obj = load_segmented_mesh(&m, &l).unwrap();
        // independent scan of the label file
        let label_text = std::fs::read_to_string(&l).unwrap();
        let count = |name: &str| label_text.lines().filter(|x| *x == name).count();
        assert_eq!(obj.part("base").unwrap().mesh.faces.len(), count("base"));
        assert_eq!(obj.part("lid").unwrap().mesh.faces.len(), count("lid"));
        assert_eq!(obj.parts.len(), 2);
    }

    #[test]
    fn label_count_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (obj_text, labels) = two_boxes();
        let (m, l) = write_fixture(dir.path(), &obj_text, &labels_string(&labels[1..]));
        let err = load_segmented_mesh(&m, &l).unwrap_err();
        assert!(err.to_string().contains("label/face count mismatch"));
    }

    #[test]
    fn normalization_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let (obj_text, labels) = two_boxes();
        let (m, l) = write_fixture(dir.path(), &obj_text, &labels_string(&labels));
        let obj = load_segmented_mesh(&m, &l).unwrap();
        let again = obj.normalized();
        for (a, b) in obj.parts.iter().zip(&again.parts) {
            for (p, q) in a.mesh.vertices.iter().zip(&b.mesh.vertices) {
                assert!((p - q).norm() < 1e-9);
            }
        }
        assert!((again.normalization.scale - obj.normalization.scale).abs() < 1e-9);
    }

    #[test]
    fn missing_file_is_reported() {
        let err = load_segmented_mesh(Path::new("/nonexistent.obj"), Path::new("/x")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
