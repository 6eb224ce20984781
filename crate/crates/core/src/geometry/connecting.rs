use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::fit::{fit_plane, Plane};
use super::{centroid, nearest_distances};
use crate::error::{Error, Result};

pub const DEFAULT_TAU0: f64 = 0.01;
pub const DEFAULT_MAX_DOUBLINGS: u32 = 8;

/// Points of two neighboring parts that lie within a threshold of the other part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectingArea {
    pub points: Vec<Point3<f64>>,
    /// `true` where the point was taken from the first (parent) cloud.
    pub from_a: Vec<bool>,
    /// Plane fit of `points`, normal pointing away from the first cloud's centroid.
    /// `None` when the selected points are collinear or too few.
    pub plane: Option<Plane>,
    pub final_threshold: f64,
    pub doublings: u32,
}

impl ConnectingArea {
    pub fn plane(&self) -> Result<&Plane> {
        self.plane
            .as_ref()
            .ok_or_else(|| Error::DegeneratePlane("connecting area is not planar-fittable".into()))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Selects the mutual-proximity zone between `pa` and `pb`, doubling the threshold from
/// `tau0` until something is selected or `max_doublings` doublings have been tried.
pub fn connecting_area(
    pa: &[Point3<f64>],
    pb: &[Point3<f64>],
    tau0: f64,
    max_doublings: u32,
) -> Result<ConnectingArea> {
    if !(tau0 > 0.0) {
        return Err(Error::Config(format!("tau0 must be positive, got {tau0}")));
    }
    let da = nearest_distances(pa, pb)?;
    let db = nearest_distances(pb, pa)?;
    let closest = da.iter().chain(&db).copied().fold(f64::INFINITY, f64::min);

    let mut tau = tau0;
    for doublings in 0..=max_doublings {
        if closest <= tau {
            let mut points = Vec::new();
            let mut from_a = Vec::new();
            for (p, d) in pa.iter().zip(&da) {
                if *d <= tau {
                    points.push(*p);
                    from_a.push(true);
                }
            }
            for (p, d) in pb.iter().zip(&db) {
                if *d <= tau {
                    points.push(*p);
                    from_a.push(false);
                }
            }
            let plane = fit_plane(&points)
                .ok()
                .map(|pl| pl.oriented_away_from(&centroid(pa)).0);
            return Ok(ConnectingArea {
                points,
                from_a,
                plane,
                final_threshold: tau,
                doublings,
            });
        }
        if doublings < max_doublings {
            tau *= 2.0;
        }
    }
    Err(Error::NotConnectable {
        final_threshold: tau,
        doublings: max_doublings,
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn square(rng: &mut ChaCha8Rng, n: usize, f: impl Fn(f64, f64) -> Point3<f64>) -> Vec<Point3<f64>> {
        (0..n).map(|_| f(rng.gen(), rng.gen())).collect()
    }

    #[test]
    fn squares_sharing_an_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // diag of the union is sqrt(5); threshold 0.02 diag
        let tau = 0.02 * 5f64.sqrt();
        let a = square(&mut rng, 3000, |u, v| Point3::new(u, v, 0.0));
        let b = square(&mut rng, 3000, |u, v| Point3::new(1.0 + u, v, 0.0));
        let area = connecting_area(&a, &b, tau, 8).unwrap();
        assert_eq!(area.doublings, 0);
        assert!(!area.is_empty());
        // brute-force membership: every selected point is within tau of the other set
        for (p, &fa) in area.points.iter().zip(&area.from_a) {
            let other = if fa { &b } else { &a };
            let d = other.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= tau);
            assert!((p.x - 1.0).abs() <= tau);
        }
        let plane = area.plane.unwrap();
        assert!((plane.normal.z.abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_requires_two_doublings() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = square(&mut rng, 2000, |u, v| Point3::new(u, v, 0.0));
        let b = square(&mut rng, 2000, |u, v| Point3::new(u, v, 0.1));
        let area = connecting_area(&a, &b, 0.03, 8).unwrap();
        assert_eq!(area.doublings, 2);
        assert!((area.final_threshold - 0.12).abs() < 1e-15);
        assert!(!area.is_empty());
        // plane normal points away from a, i.e. towards +z
        assert!(area.plane.unwrap().normal.z > 0.99);
    }

    #[test]
    fn unreachable_parts_fail() {
        let a = vec![Point3::origin(), Point3::new(0.1, 0.0, 0.0)];
        let b = vec![Point3::new(10.0, 0.0, 0.0)];
        let err = connecting_area(&a, &b, 0.01, 5).unwrap_err();
        assert!(matches!(err, Error::NotConnectable { doublings: 5, .. }));
        assert!(err.to_string().contains("parts not connectable"));
    }

    #[test]
    fn swapping_inputs_gives_the_same_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = square(&mut rng, 500, |u, v| Point3::new(u, v, 0.0));
        let b = square(&mut rng, 500, |u, v| Point3::new(0.9 + u, v, 0.01));
        let ab = connecting_area(&a, &b, 0.005, 8).unwrap();
        let ba = connecting_area(&b, &a, 0.005, 8).unwrap();
        assert_eq!(ab.final_threshold, ba.final_threshold);
        let key = |p: &Point3<f64>| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        let mut s1: Vec<_> = ab.points.iter().map(key).collect();
        let mut s2: Vec<_> = ba.points.iter().map(key).collect();
        s1.sort();
        s2.sort();
        assert_eq!(s1, s2);
    }
}
