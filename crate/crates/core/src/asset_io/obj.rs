//! Minimal Wavefront OBJ reader/writer: `v x y z [r g b]` and `f` records.
//! Polygons are fan-triangulated; every triangle remembers the face line it came from.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::mesh::TriMesh;
use crate::error::{Error, Result};

/// Parsed OBJ: the triangulated mesh plus, per triangle, the index of its source `f` line.
#[derive(Debug, Clone)]
pub struct ObjData {
    pub mesh: TriMesh,
    pub source_face: Vec<usize>,
    pub face_lines: usize,
}

pub fn parse_obj(text: &str) -> Result<ObjData> {
    let mut vertices = Vec::new();
    let mut colors: Vec<Option<[f64; 3]>> = Vec::new();
    let mut faces = Vec::new();
    let mut source_face = Vec::new();
    let mut face_lines = 0;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let err = |message: String| Error::MeshParse {
            line: lineno + 1,
            message,
        };
        match tokens.next() {
            Some("v") => {
                let nums = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| err(format!("bad vertex: {e}")))?;
                match nums.len() {
                    3 | 4 => {
                        vertices.push(Point3::new(nums[0], nums[1], nums[2]));
                        colors.push(None);
                    }
                    6 | 7 => {
                        vertices.push(Point3::new(nums[0], nums[1], nums[2]));
                        let c = if nums.len() == 7 { &nums[4..7] } else { &nums[3..6] };
                        colors.push(Some([c[0], c[1], c[2]]));
                    }
                    n => return Err(err(format!("vertex with {n} components"))),
                }
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| err(format!("bad face index {tok:?}")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(err("face index 0".into()));
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(err(format!("face index {i} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(err("face with fewer than 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                    source_face.push(face_lines);
                }
                face_lines += 1;
            }
            _ => {}
        }
    }

    let mesh_colors = if colors.iter().any(Option::is_some) {
        Some(colors.into_iter().map(|c| c.unwrap_or([1.0; 3])).collect())
    } else {
        None
    };
    Ok(ObjData {
        mesh: TriMesh {
            vertices,
            colors: mesh_colors,
            faces,
        },
        source_face,
        face_lines,
    })
}

pub fn read_obj(path: &Path) -> Result<ObjData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.colors {
            Some(c) => {
                let [r, g, b] = c[i];
                let _ = writeln!(out, "v {} {} {} {} {} {}", v.x, v.y, v.z, r, g, b);
            }
            None => {
                let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
            }
        }
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    std::fs::write(path, obj_string(mesh)).map_err(|e| Error::io(path, e))
}

/// One part name per face line; blank lines and `#` comments are skipped.
pub fn parse_labels(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

pub fn labels_string<S: AsRef<str>>(labels: &[S]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(l.as_ref());
        out.push('\n');
    }
    out
}
