use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::knn::dist2;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const CONVERGENCE_SHIFT: f64 = 1e-7;
pub const RESTARTS: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignment: Vec<usize>,
    pub centers: Vec<Point3<f64>>,
    /// Sum of squared distances to assigned centers.
    pub objective: f64,
    /// Objective after every assignment step of the kept restart.
    pub history: Vec<f64>,
}

/// Lloyd's algorithm with k-means++ seeding, best of three seeded restarts.
pub fn kmeans(points: &[Point3<f64>], k: usize, seed: u64) -> Result<KMeans> {
    kmeans_with_restarts(points, k, seed, RESTARTS)
}

pub fn kmeans_with_restarts(
    points: &[Point3<f64>],
    k: usize,
    seed: u64,
    restarts: u64,
) -> Result<KMeans> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK {
            k,
            points: points.len(),
        });
    }
    let mut best: Option<KMeans> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r);
        let run = lloyd(points, seed_centers(points, k, &mut rng));
        if best.as_ref().map_or(true, |b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn seed_centers(points: &[Point3<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point3<f64>> {
    let mut chosen = vec![false; points.len()];
    let first = rng.gen_range(0..points.len());
    chosen[first] = true;
    let mut centers = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // all remaining mass is zero: duplicates only, pick an unused index
            let free: Vec<usize> = (0..points.len()).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(points[pick]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[pick]));
        }
    }
    centers
}

pub(crate) fn assign(points: &[Point3<f64>], centers: &[Point3<f64>]) -> (Vec<usize>, f64) {
    let mut objective = 0.0;
    let assignment = points
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let d = dist2(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            objective += best.1;
            best.0
        })
        .collect();
    (assignment, objective)
}

fn means(points: &[Point3<f64>], assignment: &[usize], previous: &[Point3<f64>]) -> Vec<Point3<f64>> {
    let mut sums = vec![Vector3::zeros(); previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &a) in points.iter().zip(assignment) {
        sums[a] += p.coords;
        counts[a] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, n), old)| if n == 0 { *old } else { Point3::from(s / n as f64) })
        .collect()
}

fn lloyd(points: &[Point3<f64>], mut centers: Vec<Point3<f64>>) -> KMeans {
    let mut history = Vec::new();
    let (mut assignment, mut objective) = assign(points, &centers);
    history.push(objective);
    for _ in 0..MAX_ITERATIONS {
        let updated = means(points, &assignment, &centers);
        let shift = updated
            .iter()
            .zip(&centers)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        centers = updated;
        let (next, obj) = assign(points, &centers);
        history.push(obj);
        let stable = next == assignment;
        assignment = next;
        objective = obj;
        if stable || shift < CONVERGENCE_SHIFT {
            break;
        }
    }
    // centers are the means of the final assignment
    centers = means(points, &assignment, &centers);
    objective = objective.min(
        points
            .iter()
            .zip(&assignment)
            .map(|(p, &a)| dist2(p, &centers[a]))
            .sum(),
    );
    KMeans {
        assignment,
        centers,
        objective,
        history,
    }
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, UnitBall};

    use super::*;

    #[test]
    fn saturated_k_returns_the_points() {
        let pts: Vec<_> = (0..6).map(|i| Point3::new(i as f64, (i * i) as f64, 0.0)).collect();
        let km = kmeans(&pts, pts.len(), 3).unwrap();
        let mut got: Vec<_> = km.centers.iter().map(|c| (c.x, c.y)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want: Vec<_> = pts.iter().map(|c| (c.x, c.y)).collect();
        assert_eq!(got, want);
        assert_eq!(km.objective, 0.0);
    }

    #[test]
    fn single_cluster_is_the_centroid() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(1.0, 3.0, 0.0),
        ];
        let km = kmeans(&pts, 1, 0).unwrap();
        assert!((km.centers[0] - Point3::new(1.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_blobs_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pts = Vec::new();
        for cx in [-0.5, 0.5] {
            for _ in 0..100 {
                let v: [f64; 3] = UnitBall.sample(&mut rng);
                pts.push(Point3::new(cx + 0.01 * v[0], 0.01 * v[1], 0.01 * v[2]));
            }
        }
        let km = kmeans(&pts, 2, 1).unwrap();
        let mut xs: Vec<f64> = km.centers.iter().map(|c| c.x).collect();
        xs.sort_by(f64::total_cmp);
        let blob_mean = |lo: usize| {
            pts[lo..lo + 100].iter().map(|p| p.coords).sum::<Vector3<f64>>() / 100.0
        };
        assert!((xs[0] - blob_mean(0).x).abs() < 0.02);
        assert!((xs[1] - blob_mean(100).x).abs() < 0.02);
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        let pts = [Point3::origin(); 2];
        assert!(matches!(kmeans(&pts, 3, 0), Err(Error::InvalidK { k: 3, points: 2 })));
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<_> = (0..200)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        assert_eq!(kmeans(&pts, 8, 4).unwrap(), kmeans(&pts, 8, 4).unwrap());
    }
}
