use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;
use crate::error::{Error, Result};

/// Oriented, colored surface samples of one part, in normalized object coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PartCloud {
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub colors: Vec<[f64; 3]>,
    pub seed: u64,
}

impl PartCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3<f64> {
        crate::geometry::centroid(&self.points)
    }

    /// Point-only cloud with upward normals and white color, mostly for tests.
    pub fn from_points(points: Vec<Point3<f64>>) -> Self {
        let n = points.len();
        PartCloud {
            points,
            normals: vec![Vector3::z(); n],
            colors: vec![[1.0; 3]; n],
            seed: 0,
        }
    }

    pub fn concat<'a>(clouds: impl IntoIterator<Item = &'a PartCloud>) -> PartCloud {
        let mut out = PartCloud::default();
        for c in clouds {
            out.points.extend_from_slice(&c.points);
            out.normals.extend_from_slice(&c.normals);
            out.colors.extend_from_slice(&c.colors);
        }
        out
    }

    /// Adds isotropic Gaussian noise of standard deviation `sigma` to positions only.
    pub fn jittered(&self, sigma: f64, seed: u64) -> PartCloud {
        if sigma <= 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        let mut out = self.clone();
        for p in &mut out.points {
            *p += Vector3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            );
        }
        out
    }
}

/// Per-triangle counts proportional to area, largest remainders first (ties by index).
fn allocate(areas: &[f64], total: f64, n: usize) -> Vec<usize> {
    let exact: Vec<f64> = areas.iter().map(|a| a / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..areas.len()).filter(|&f| areas[f] > 0.0).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &f in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[f] += 1;
    }
    counts
}

// plastic-number Kronecker sequence, low discrepancy in the unit square
const R2: [f64; 2] = [0.754_877_666_246_692_7, 0.569_840_290_998_053_3];

/// Area-uniform stratified surface sampling: each triangle receives its exact share of
/// `n` and places it along a randomly shifted low-discrepancy sequence, so sample means
/// converge much faster than with independent draws. Normals come from the sampled face,
/// colors are interpolated barycentrically (white for untextured meshes).
pub fn sample_mesh(mesh: &TriMesh, n: usize, seed: u64) -> Result<PartCloud> {
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegeneratePart(format!("{} faces", mesh.faces.len())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = PartCloud {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        colors: Vec::with_capacity(n),
        seed,
    };
    for (face, count) in allocate(&areas, total, n).into_iter().enumerate() {
        let shift: [f64; 2] = [rng.gen(), rng.gen()];
        if count == 0 {
            continue;
        }
        let [ia, ib, ic] = mesh.faces[face];
        let [a, b, c] = mesh.triangle(face);
        let normal = mesh.face_normal(face).expect("sampled face has positive area");
        let (ca, cb, cc) = (mesh.vertex_color(ia), mesh.vertex_color(ib), mesh.vertex_color(ic));
        for i in 0..count {
            let k = (i + 1) as f64;
            let (mut u, mut v) = ((shift[0] + k * R2[0]).fract(), (shift[1] + k * R2[1]).fract());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let w = 1.0 - u - v;
            cloud.points.push(Point3::from(a.coords * w + b.coords * u + c.coords * v));
            cloud.normals.push(normal);
            cloud.colors.push([0, 1, 2].map(|j| ca[j] * w + cb[j] * u + cc[j] * v));
        }
    }
    Ok(cloud)
}
