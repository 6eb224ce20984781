//! Total-least-squares plane and line fits via the 3x3 covariance eigensystem.

use nalgebra::{Isometry3, Matrix3, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::centroid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub centroid: Point3<f64>,
    pub normal: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
}

impl Plane {
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        (p - self.centroid).dot(&self.normal)
    }

    /// Flips the normal to point away from `reference`. Returns the plane and whether the
    /// reference lay on the plane (within `1e-12`), in which case the canonical sign is kept.
    pub fn oriented_away_from(&self, reference: &Point3<f64>) -> (Plane, bool) {
        let s = (self.centroid - reference).dot(&self.normal);
        if s.abs() <= 1e-12 {
            (*self, true)
        } else if s < 0.0 {
            (
                Plane {
                    centroid: self.centroid,
                    normal: -self.normal,
                },
                false,
            )
        } else {
            (*self, false)
        }
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Plane {
        Plane {
            centroid: iso * self.centroid,
            normal: iso * self.normal,
        }
    }
}

impl Line {
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Self {
        Line {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn distance_to_point(&self, p: &Point3<f64>) -> f64 {
        let v = p - self.origin;
        (v - self.direction * v.dot(&self.direction)).norm()
    }

    pub fn point_at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction * t
    }

    pub fn reversed(&self) -> Line {
        Line {
            origin: self.origin,
            direction: -self.direction,
        }
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Line {
        Line {
            origin: iso * self.origin,
            direction: iso * self.direction,
        }
    }
}

/// Makes the largest-magnitude component positive; ties go to the lowest axis.
pub fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let mut best = 0;
    for i in 1..3 {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v
    } else {
        v
    }
}

/// Eigenvalues ascending with matching unit eigenvectors.
fn covariance_eigen(points: &[Point3<f64>], mean: &Point3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i]);
    let vecs = idx.map(|i| eig.eigenvectors.column(i).normalize());
    (vals, vecs)
}

pub fn fit_plane(points: &[Point3<f64>]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::DegeneratePlane(format!("{} points", points.len())));
    }
    let c = centroid(points);
    let (vals, vecs) = covariance_eigen(points, &c);
    if !(vals[2] > 0.0) || vals[1] <= 1e-12 * vals[2] {
        return Err(Error::DegeneratePlane("points are collinear or coincident".into()));
    }
    Ok(Plane {
        centroid: c,
        normal: canonical_sign(vecs[0]),
    })
}

pub fn fit_line(points: &[Point3<f64>]) -> Result<Line> {
    if points.len() < 2 {
        return Err(Error::DegenerateLine(format!("{} points", points.len())));
    }
    let c = centroid(points);
    let (vals, vecs) = covariance_eigen(points, &c);
    let scale = points
        .iter()
        .map(|p| p.coords.abs().max())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    if !(vals[2] > 1e-24 * scale * scale) {
        return Err(Error::DegenerateLine("all points coincide".into()));
    }
    Ok(Line {
        origin: c,
        direction: canonical_sign(vecs[2]),
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::{Translation3, UnitQuaternion};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    #[test]
    fn horizontal_plane() {
        let pts: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.3, 0.8)]
            .iter()
            .map(|&(x, y)| Point3::new(x, y, 0.7))
            .collect();
        let plane = fit_plane(&pts).unwrap();
        assert!((plane.normal - Vector3::z()).norm() < 1e-12);
        assert!((plane.centroid.z - 0.7).abs() < 1e-12);
    }

    #[test]
    fn slanted_plane_normal_is_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> = (0..40)
            .map(|_| {
                let x: f64 = rng.gen_range(-1.0..1.0);
                Point3::new(x, 1.0 - x, rng.gen_range(-1.0..1.0))
            })
            .collect();
        let plane = fit_plane(&pts).unwrap();
        let expected = Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
        assert!((plane.normal - expected).norm() < 1e-9);
    }

    #[test]
    fn plane_needs_three_non_collinear_points() {
        let two = [Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        assert!(matches!(fit_plane(&two), Err(Error::DegeneratePlane(_))));
        let collinear: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_plane(&collinear), Err(Error::DegeneratePlane(_))));
    }

    #[test]
    fn two_point_line() {
        let line = fit_line(&[Point3::origin(), Point3::new(0.0, 0.0, 1.0)]).unwrap();
        assert!((line.origin - Point3::new(0.0, 0.0, 0.5)).norm() < 1e-15);
        assert!((line.direction - Vector3::z()).norm() < 1e-15);
    }

    #[test]
    fn noisy_line_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1e-4).unwrap();
        let pts: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64 / 49.0 - 0.5;
                Point3::new(t, 2.0 * t, 0.0)
                    + Vector3::new(
                        noise.sample(&mut rng),
                        noise.sample(&mut rng),
                        noise.sample(&mut rng),
                    )
            })
            .collect();
        let line = fit_line(&pts).unwrap();
        let truth = Vector3::new(1.0, 2.0, 0.0).normalize();
        let angle = line.direction.dot(&truth).abs().min(1.0).acos().to_degrees();
        assert!(angle < 0.01, "angle {angle}");
    }

    #[test]
    fn coincident_points_have_no_line() {
        let pts = [Point3::new(1.0, 2.0, 3.0); 3];
        assert!(matches!(fit_line(&pts), Err(Error::DegenerateLine(_))));
    }

    #[test]
    fn orientation_away_from_reference() {
        let plane = Plane {
            centroid: Point3::new(0.5, 0.0, 0.0),
            normal: -Vector3::x(),
        };
        let (p, tie) = plane.oriented_away_from(&Point3::origin());
        assert!(!tie);
        assert_eq!(p.normal, Vector3::x());
        let (_, tie) = plane.oriented_away_from(&Point3::new(0.5, 3.0, 1.0));
        assert!(tie);
    }

    fn rigid() -> impl Strategy<Value = Isometry3<f64>> {
        (
            -3.0..3.0f64,
            -3.0..3.0f64,
            -3.0..3.0f64,
            -3.2..3.2f64,
            -1.5..1.5f64,
            -3.2..3.2f64,
        )
            .prop_map(|(x, y, z, r, p, w)| {
                Isometry3::from_parts(
                    Translation3::new(x, y, z),
                    UnitQuaternion::from_euler_angles(r, p, w),
                )
            })
    }

    proptest! {
        #[test]
        fn fits_are_rigid_equivariant(iso in rigid(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point3<f64>> = (0..30)
                .map(|_| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.1..0.1)))
                .collect();
            let moved: Vec<_> = pts.iter().map(|p| iso * p).collect();

            let plane = fit_plane(&pts).unwrap().transformed(&iso);
            let plane2 = fit_plane(&moved).unwrap();
            prop_assert!((plane.centroid - plane2.centroid).norm() < 1e-6);
            prop_assert!(1.0 - plane.normal.dot(&plane2.normal).abs() < 1e-6);

            let line = fit_line(&pts).unwrap().transformed(&iso);
            let line2 = fit_line(&moved).unwrap();
            prop_assert!((line.origin - line2.origin).norm() < 1e-6);
            prop_assert!(1.0 - line.direction.dot(&line2.direction).abs() < 1e-6);
        }
    }
}
