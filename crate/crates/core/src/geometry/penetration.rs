//! Inside tests and penetration depth against triangle meshes.

use std::collections::VecDeque;

use nalgebra::{Point3, Vector3};

use crate::asset_io::{Aabb, TriMesh};

/// Closest point on the surface of `mesh` to `p`; `p` itself for an empty mesh.
pub fn snap_to_surface(mesh: &TriMesh, p: &Point3<f64>) -> Point3<f64> {
    let mut best = (*p, f64::INFINITY);
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let q = closest_point_on_triangle(p, &a, &b, &c);
        let d = (q - p).norm_squared();
        if d < best.1 {
            best = (q, d);
        }
    }
    best.0
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Möller–Trumbore; returns the ray parameter of a hit with `t > 0`.
fn ray_triangle(origin: &Point3<f64>, dir: &Vector3<f64>, tri: &[Point3<f64>; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = inv * e2.dot(&q);
    (t > 1e-12).then_some(t)
}

const RAY_DIRECTIONS: [[f64; 3]; 3] = [
    [0.577_350_3, 0.577_350_2, 0.577_350_4],
    [-0.267_261_2, 0.534_522_5, 0.801_783_7],
    [0.801_783_7, -0.267_261_2, -0.534_522_5],
];

const VOXEL_RESOLUTION: usize = 48;

struct VoxelGrid {
    origin: Point3<f64>,
    cell: f64,
    dims: [usize; 3],
    /// `true` for cells not reachable from outside without crossing the surface.
    occupied: Vec<bool>,
}

impl VoxelGrid {
    fn build(mesh: &TriMesh, aabb: &Aabb) -> VoxelGrid {
        let extent = aabb.max - aabb.min;
        let cell = (extent.max() / VOXEL_RESOLUTION as f64).max(1e-9);
        // two cells of padding keep the outer shell free of surface voxels
        let origin = aabb.min - Vector3::repeat(2.0 * cell);
        let dims = [0, 1, 2].map(|i| (extent[i] / cell).ceil() as usize + 5);
        let idx = |x: usize, y: usize, z: usize| (z * dims[1] + y) * dims[0] + x;
        let mut surface = vec![false; dims[0] * dims[1] * dims[2]];
        let half_diag = 0.5 * cell * 3f64.sqrt();
        for f in 0..mesh.faces.len() {
            let [a, b, c] = mesh.triangle(f);
            let lo = a.inf(&b).inf(&c);
            let hi = a.sup(&b).sup(&c);
            let range = |i: usize| {
                let l = (((lo[i] - origin[i]) / cell).floor() as isize - 1).max(0) as usize;
                let h = (((hi[i] - origin[i]) / cell).floor() as usize + 1).min(dims[i] - 1);
                l..=h
            };
            for z in range(2) {
                for y in range(1) {
                    for x in range(0) {
                        let center = origin + Vector3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5) * cell;
                        let q = closest_point_on_triangle(&center, &a, &b, &c);
                        if (q - center).norm() <= half_diag {
                            surface[idx(x, y, z)] = true;
                        }
                    }
                }
            }
        }
        let mut outside = vec![false; surface.len()];
        let mut queue = VecDeque::from([(0usize, 0usize, 0usize)]);
        outside[0] = true;
        while let Some((x, y, z)) = queue.pop_front() {
            let neighbors = [
                (x.wrapping_sub(1), y, z),
                (x + 1, y, z),
                (x, y.wrapping_sub(1), z),
                (x, y + 1, z),
                (x, y, z.wrapping_sub(1)),
                (x, y, z + 1),
            ];
            for (nx, ny, nz) in neighbors {
                if nx < dims[0] && ny < dims[1] && nz < dims[2] {
                    let i = idx(nx, ny, nz);
                    if !outside[i] && !surface[i] {
                        outside[i] = true;
                        queue.push_back((nx, ny, nz));
                    }
                }
            }
        }
        VoxelGrid {
            origin,
            cell,
            dims,
            occupied: outside.into_iter().map(|o| !o).collect(),
        }
    }

    fn contains(&self, p: &Point3<f64>) -> bool {
        let mut ix = [0usize; 3];
        for i in 0..3 {
            let f = ((p[i] - self.origin[i]) / self.cell).floor();
            if f < 0.0 || f as usize >= self.dims[i] {
                return false;
            }
            ix[i] = f as usize;
        }
        self.occupied[(ix[2] * self.dims[1] + ix[1]) * self.dims[0] + ix[0]]
    }
}

/// A mesh prepared for repeated inside/depth queries.
pub struct Solid {
    triangles: Vec<[Point3<f64>; 3]>,
    aabb: Aabb,
    voxels: Option<VoxelGrid>,
}

impl Solid {
    pub fn new(mesh: &TriMesh) -> Option<Solid> {
        let aabb = mesh.aabb()?;
        let triangles = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let voxels = (!mesh.is_watertight()).then(|| VoxelGrid::build(mesh, &aabb));
        Some(Solid {
            triangles,
            aabb,
            voxels,
        })
    }

    pub fn is_watertight(&self) -> bool {
        self.voxels.is_none()
    }

    /// Ray-parity containment (majority of three rays) for watertight meshes,
    /// voxel occupancy otherwise.
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        if !self.aabb.contains(p, 0.0) {
            return false;
        }
        if let Some(v) = &self.voxels {
            return v.contains(p);
        }
        let votes = RAY_DIRECTIONS
            .iter()
            .filter(|d| {
                let dir = Vector3::new(d[0], d[1], d[2]);
                let hits = self
                    .triangles
                    .iter()
                    .filter(|t| ray_triangle(p, &dir, t).is_some())
                    .count();
                hits % 2 == 1
            })
            .count();
        votes >= 2
    }

    pub fn surface_distance(&self, p: &Point3<f64>) -> f64 {
        self.triangles
            .iter()
            .map(|[a, b, c]| (closest_point_on_triangle(p, a, b, c) - p).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    pub fn closest_surface_point(&self, p: &Point3<f64>) -> Point3<f64> {
        let mut best = (*p, f64::INFINITY);
        for [a, b, c] in &self.triangles {
            let q = closest_point_on_triangle(p, a, b, c);
            let d = (q - p).norm_squared();
            if d < best.1 {
                best = (q, d);
            }
        }
        best.0
    }

    /// Depth below the surface for contained points, `None` outside.
    pub fn penetration_depth(&self, p: &Point3<f64>) -> Option<f64> {
        self.contains(p).then(|| self.surface_distance(p))
    }
}

/// Reusable obstacle set for sweeps.
pub struct Obstacles {
    solids: Vec<Solid>,
}

impl Obstacles {
    pub fn new<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> Self {
        Obstacles {
            solids: meshes.into_iter().filter_map(Solid::new).collect(),
        }
    }

    pub fn penetrates(&self, p: &Point3<f64>, eps: f64) -> bool {
        self.solids
            .iter()
            .any(|s| s.penetration_depth(p).is_some_and(|d| d > eps))
    }

    pub fn fraction(&self, points: &[Point3<f64>], eps: f64) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let hits = points.iter().filter(|p| self.penetrates(p, eps)).count();
        hits as f64 / points.len() as f64
    }
}

/// Fraction of `moving` points lying deeper than `eps` inside any obstacle mesh.
pub fn penetration_fraction(moving: &[Point3<f64>], obstacles: &[TriMesh], eps: f64) -> f64 {
    Obstacles::new(obstacles).fraction(moving, eps)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::asset_io::box_mesh;

    fn unit_cube() -> TriMesh {
        box_mesh(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5))
    }

    #[test]
    fn outside_points_do_not_penetrate() {
        let pts: Vec<_> = (0..20).map(|i| Point3::new(1.0 + i as f64 * 0.1, 0.0, 0.0)).collect();
        assert_eq!(penetration_fraction(&pts, &[unit_cube()], 0.0), 0.0);
    }

    #[test]
    fn thirty_of_a_hundred_at_the_center() {
        let mut pts = vec![Point3::origin(); 30];
        pts.extend((0..70).map(|i| Point3::new(2.0, i as f64, 0.0)));
        assert!((penetration_fraction(&pts, &[unit_cube()], 0.0) - 0.30).abs() < 1e-15);
        // eps beyond the half extent: center depth is 0.5
        assert_eq!(penetration_fraction(&pts, &[unit_cube()], 0.6), 0.0);
    }

    #[test]
    fn containment_matches_the_analytic_box() {
        let solid = Solid::new(&unit_cube()).unwrap();
        assert!(solid.is_watertight());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let p = Point3::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
            let inside = p.coords.abs().max() < 0.5;
            assert_eq!(solid.contains(&p), inside, "{p}");
            if inside {
                let depth = 0.5 - p.coords.abs().max();
                assert!((solid.surface_distance(&p) - depth).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_mesh_uses_voxel_occupancy() {
        // a box missing its top is not watertight; only points near the walls count as occupied
        let mut open = unit_cube();
        open.faces.remove(3);
        open.faces.remove(2);
        let solid = Solid::new(&open).unwrap();
        assert!(!solid.is_watertight());
        assert!(!solid.contains(&Point3::origin()));
        assert!(solid.contains(&Point3::new(0.499, 0.0, 0.0)));
    }

    #[test]
    fn fraction_is_monotone_in_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<_> = (0..300)
            .map(|_| Point3::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
            .collect();
        let obstacles = Obstacles::new([&unit_cube()]);
        let mut last = 1.0;
        for eps in [0.0, 0.01, 0.05, 0.1, 0.2, 0.4, 0.6] {
            let f = obstacles.fraction(&pts, eps);
            assert!(f <= last);
            last = f;
        }
    }

    #[test]
    fn closest_point_regions() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        assert_eq!(closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&Point3::new(0.25, 0.25, 3.0), &a, &b, &c), Point3::new(0.25, 0.25, 0.0));
        let q = closest_point_on_triangle(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}
