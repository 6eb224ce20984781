//! Numerical kernels: nearest neighbors, connecting areas, TLS fits, clustering,
//! superpoints and penetration measurement.

mod connecting;
mod fit;
mod kmeans;
mod knn;
mod penetration;
mod superpoints;

use nalgebra::{Point3, Vector3};

pub use connecting::{connecting_area, ConnectingArea, DEFAULT_MAX_DOUBLINGS, DEFAULT_TAU0};
pub use fit::{canonical_sign, fit_line, fit_plane, Line, Plane};
pub use kmeans::{kmeans, kmeans_with_restarts, KMeans};
pub use knn::KdTree;
pub use penetration::{closest_point_on_triangle, penetration_fraction, snap_to_surface, Obstacles, Solid};
pub use superpoints::{knn_graph, superpoints, Region, SuperpointPartition};

use crate::error::{Error, Result};

pub fn centroid(points: &[Point3<f64>]) -> Point3<f64> {
    if points.is_empty() {
        return Point3::origin();
    }
    let sum: Vector3<f64> = points.iter().map(|p| p.coords).sum();
    Point3::from(sum / points.len() as f64)
}

/// Exact Euclidean distance from every query point to its nearest target point.
pub fn nearest_distances(query: &[Point3<f64>], target: &[Point3<f64>]) -> Result<Vec<f64>> {
    if query.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let tree = KdTree::new(target);
    Ok(query
        .iter()
        .map(|q| tree.nearest(q).expect("non-empty tree").1.sqrt())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_distance_is_zero() {
        let pts: Vec<_> = (0..50).map(|i| Point3::new(i as f64, (i % 7) as f64, 0.5)).collect();
        assert!(nearest_distances(&pts, &pts).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn two_point_minimum() {
        let d = nearest_distances(
            &[Point3::origin()],
            &[Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 2.0, 0.0)],
        )
        .unwrap();
        assert_eq!(d, vec![1.0]);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(nearest_distances(&[], &[Point3::origin()]), Err(Error::EmptyCloud)));
        assert!(matches!(nearest_distances(&[Point3::origin()], &[]), Err(Error::EmptyCloud)));
    }
}
