use std::collections::HashMap;

use nalgebra::{Isometry3, Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Indexed triangle mesh with optional per-vertex RGB color in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<[f64; 3]>>,
    pub faces: Vec<[usize; 3]>,
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut aabb = Aabb {
            min: first,
            max: first,
        };
        for p in it {
            aabb.min = aabb.min.inf(p);
            aabb.max = aabb.max.sup(p);
        }
        Some(aabb)
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn contains(&self, p: &Point3<f64>, margin: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - margin && p[i] <= self.max[i] + margin)
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            colors: None,
            faces,
        }
    }

    pub fn with_uniform_color(mut self, rgb: [f64; 3]) -> Self {
        self.colors = Some(vec![rgb; self.vertices.len()]);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the counter-clockwise winding, `None` for zero-area faces.
    pub fn face_normal(&self, face: usize) -> Option<Vector3<f64>> {
        let [a, b, c] = self.triangle(face);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        (len > 0.0).then(|| n / len)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn vertex_color(&self, v: usize) -> [f64; 3] {
        self.colors.as_ref().map_or([1.0; 3], |c| c[v])
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Area-weighted surface centroid; falls back to the vertex mean for zero-area meshes.
    pub fn surface_centroid(&self) -> Point3<f64> {
        let mut acc = Vector3::zeros();
        let mut area = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            let w = self.face_area(f);
            acc += w * (a.coords + b.coords + c.coords) / 3.0;
            area += w;
        }
        if area > 0.0 {
            Point3::from(acc / area)
        } else if self.vertices.is_empty() {
            Point3::origin()
        } else {
            let sum: Vector3<f64> = self.vertices.iter().map(|p| p.coords).sum();
            Point3::from(sum / self.vertices.len() as f64)
        }
    }

    /// Length of the mesh's shadow on `axis` (max minus min of vertex projections).
    pub fn extent_along(&self, axis: &Vector3<f64>) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let t = v.coords.dot(axis);
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|p| iso * p).collect(),
            colors: self.colors.clone(),
            faces: self.faces.clone(),
        }
    }

    pub fn map_points(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            colors: self.colors.clone(),
            faces: self.faces.clone(),
        }
    }

    /// Concatenates meshes; colors are kept only when every input carries them,
    /// otherwise missing colors become white.
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut out = TriMesh::default();
        let mut colors = Vec::new();
        let mut any_color = false;
        for m in meshes {
            let base = out.vertices.len();
            out.vertices.extend_from_slice(&m.vertices);
            out.faces
                .extend(m.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
            any_color |= m.colors.is_some();
            colors.extend((0..m.vertices.len()).map(|v| m.vertex_color(v)));
        }
        if any_color {
            out.colors = Some(colors);
        }
        out
    }

    /// A mesh is treated as watertight when, after welding bit-identical vertex
    /// positions, every undirected edge is shared by exactly two faces.
    pub fn is_watertight(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut weld: HashMap<[u64; 3], usize> = HashMap::new();
        let ids: Vec<usize> = self
            .vertices
            .iter()
            .map(|p| {
                let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
                let next = weld.len();
                *weld.entry(key).or_insert(next)
            })
            .collect();
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let (a, b) = (ids[a], ids[b]);
                if a == b {
                    continue;
                }
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        !edges.is_empty() && edges.values().all(|&c| c == 2)
    }
}

/// Similarity transform `p ↦ scale·p + offset` applied at load time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub offset: Vector3<f64>,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            scale: 1.0,
            offset: Vector3::zeros(),
        }
    }
}

impl Normalization {
    /// Transform that centers `aabb` at the origin with unit diagonal.
    pub fn for_aabb(aabb: &Aabb) -> Self {
        let diag = aabb.diagonal();
        let scale = if diag > 0.0 { 1.0 / diag } else { 1.0 };
        Normalization {
            scale,
            offset: -aabb.center().coords * scale,
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(p.coords * self.scale + self.offset)
    }

    pub fn invert(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords - self.offset) / self.scale)
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &Normalization) -> Normalization {
        Normalization {
            scale: self.scale * inner.scale,
            offset: inner.offset * self.scale + self.offset,
        }
    }
}

/// Vertices and faces of an axis-aligned box, outward winding.
pub fn box_mesh(min: Point3<f64>, max: Point3<f64>) -> TriMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriMesh::new(vertices, faces)
}

/// Closed prism approximating a cylinder: `segments` sides, the base disc centered at `base`,
/// extruded by `height` along the unit vector `axis`. Caps are fans around a center vertex.
pub fn cylinder_mesh(base: Point3<f64>, axis: Vector3<f64>, radius: f64, height: f64, segments: usize) -> TriMesh {
    let axis = axis.normalize();
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let n = segments.max(3);
    let top = base + axis * height;
    let mut vertices = Vec::with_capacity(2 * n + 2);
    for k in 0..n {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        let r = (e1 * t.cos() + e2 * t.sin()) * radius;
        vertices.push(base + r);
        vertices.push(top + r);
    }
    let (cb, ct) = (2 * n, 2 * n + 1);
    vertices.push(base);
    vertices.push(top);
    let mut faces = Vec::with_capacity(4 * n);
    for k in 0..n {
        let (b0, t0) = (2 * k, 2 * k + 1);
        let (b1, t1) = (2 * ((k + 1) % n), 2 * ((k + 1) % n) + 1);
        faces.push([b0, b1, t1]);
        faces.push([b0, t1, t0]);
        faces.push([cb, b1, b0]);
        faces.push([ct, t0, t1]);
    }
    TriMesh::new(vertices, faces)
}
