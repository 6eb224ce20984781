//! Superpoint partition of an oriented, colored cloud.
//!
//! A k-NN graph is built on positions and regions are refined top-down: each region is
//! bisected by 2-means on its (normal, color) features, the halves are split into their
//! graph-connected components, and the split is kept only when the feature energy it
//! removes exceeds `lambda` times the number of graph edges it cuts. The candidate
//! hierarchy does not depend on `lambda`, so lowering `lambda` can only keep more splits.

use std::collections::VecDeque;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::knn::{dist2, KdTree};
use crate::asset_io::PartCloud;
use crate::error::{Error, Result};

type Feature = [f64; 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub centroid: Point3<f64>,
    pub mean_normal: Vector3<f64>,
    pub mean_color: [f64; 3],
    pub count: usize,
    /// Index of the member point closest to `centroid`.
    pub representative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpointPartition {
    pub assignment: Vec<usize>,
    pub regions: Vec<Region>,
}

impl SuperpointPartition {
    pub fn representatives<'a>(&'a self, cloud: &'a PartCloud) -> impl Iterator<Item = Point3<f64>> + 'a {
        self.regions.iter().map(|r| cloud.points[r.representative])
    }
}

/// Undirected k-NN graph as sorted adjacency lists.
pub fn knn_graph(points: &[Point3<f64>], k: usize) -> Vec<Vec<usize>> {
    let tree = KdTree::new(points);
    let mut adj = vec![Vec::new(); points.len()];
    for (i, p) in points.iter().enumerate() {
        for (j, _) in tree.k_nearest(p, k + 1) {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

fn feature(cloud: &PartCloud, i: usize) -> Feature {
    let n = cloud.normals[i];
    let c = cloud.colors[i];
    [n.x, n.y, n.z, c[0], c[1], c[2]]
}

fn fdist2(a: &Feature, b: &Feature) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn fmean(features: &[Feature], members: &[usize]) -> Feature {
    let mut m = [0.0; 6];
    for &i in members {
        for (k, v) in features[i].iter().enumerate() {
            m[k] += v;
        }
    }
    m.map(|v| v / members.len() as f64)
}

fn sse(features: &[Feature], members: &[usize]) -> f64 {
    let m = fmean(features, members);
    members.iter().map(|&i| fdist2(&features[i], &m)).sum()
}

/// Connected components of `members` restricted to points sharing the same `label`.
fn components(adj: &[Vec<usize>], members: &[usize], label: &mut [i64], tag: &[i64]) -> Vec<Vec<usize>> {
    // `label[i]` holds the bisection label for members and -1 otherwise; visited members get -2
    for (&m, &t) in members.iter().zip(tag) {
        label[m] = t;
    }
    let mut out = Vec::new();
    for &start in members {
        if label[start] < 0 {
            continue;
        }
        let l = label[start];
        label[start] = -2;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if label[v] == l {
                    label[v] = -2;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    for &m in members {
        label[m] = -1;
    }
    out
}

/// Candidate children of a region, or `None` when its features are uniform.
fn bisect(features: &[Feature], adj: &[Vec<usize>], members: &[usize], label: &mut [i64]) -> Option<Vec<Vec<usize>>> {
    let mean = fmean(features, members);
    let far = |from: &Feature| {
        let mut best = (members[0], -1.0);
        for &i in members {
            let d = fdist2(&features[i], from);
            if d > best.1 {
                best = (i, d);
            }
        }
        best
    };
    let (a, _) = far(&mean);
    let (b, dab) = far(&features[a]);
    if dab <= 1e-18 {
        return None;
    }
    let mut centers = [features[a], features[b]];
    let mut tags = vec![0i64; members.len()];
    for _ in 0..25 {
        let mut changed = false;
        for (t, &i) in tags.iter_mut().zip(members) {
            let nt = if fdist2(&features[i], &centers[1]) < fdist2(&features[i], &centers[0]) { 1 } else { 0 };
            if nt != *t {
                *t = nt;
                changed = true;
            }
        }
        let groups: [Vec<usize>; 2] = [0, 1].map(|g| {
            members
                .iter()
                .zip(&tags)
                .filter(|(_, &t)| t == g)
                .map(|(&i, _)| i)
                .collect()
        });
        if groups.iter().any(Vec::is_empty) {
            return None;
        }
        centers = [fmean(features, &groups[0]), fmean(features, &groups[1])];
        if !changed {
            break;
        }
    }
    Some(components(adj, members, label, &tags))
}

pub fn superpoints(cloud: &PartCloud, lambda: f64, k_nn: usize) -> Result<SuperpointPartition> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    let n = cloud.len();
    let features: Vec<Feature> = (0..n).map(|i| feature(cloud, i)).collect();
    let adj = knn_graph(&cloud.points, k_nn.max(1));
    let mut label = vec![-1i64; n];

    let all: Vec<usize> = (0..n).collect();
    let mut queue: VecDeque<Vec<usize>> = components(&adj, &all, &mut label, &vec![0; n]).into();
    let mut leaves = Vec::new();
    let mut child_of = vec![usize::MAX; n];
    while let Some(members) = queue.pop_front() {
        if members.len() < 2 {
            leaves.push(members);
            continue;
        }
        let Some(children) = bisect(&features, &adj, &members, &mut label) else {
            leaves.push(members);
            continue;
        };
        for (c, child) in children.iter().enumerate() {
            for &i in child {
                child_of[i] = c;
            }
        }
        let mut cut = 0usize;
        for &u in &members {
            for &v in &adj[u] {
                if u < v && child_of[v] != child_of[u] && child_of[v] != usize::MAX {
                    cut += 1;
                }
            }
        }
        let gain = sse(&features, &members) - children.iter().map(|c| sse(&features, c)).sum::<f64>();
        for &i in &members {
            child_of[i] = usize::MAX;
        }
        if gain > lambda * cut as f64 {
            queue.extend(children);
        } else {
            leaves.push(members);
        }
    }

    leaves.sort_by_key(|l| l[0]);
    let mut assignment = vec![0; n];
    let regions = leaves
        .iter()
        .enumerate()
        .map(|(r, members)| {
            let mut c = Vector3::zeros();
            let mut nrm = Vector3::zeros();
            let mut col = [0.0; 3];
            for &i in members {
                assignment[i] = r;
                c += cloud.points[i].coords;
                nrm += cloud.normals[i];
                for k in 0..3 {
                    col[k] += cloud.colors[i][k];
                }
            }
            let count = members.len();
            let centroid = Point3::from(c / count as f64);
            let representative = *members
                .iter()
                .min_by(|&&a, &&b| {
                    dist2(&cloud.points[a], &centroid)
                        .total_cmp(&dist2(&cloud.points[b], &centroid))
                        .then(a.cmp(&b))
                })
                .unwrap();
            Region {
                centroid,
                mean_normal: nrm.try_normalize(0.0).unwrap_or(nrm),
                mean_color: col.map(|v| v / count as f64),
                count,
                representative,
            }
        })
        .collect();
    Ok(SuperpointPartition { assignment, regions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset_io::{box_mesh, sample_mesh, TriMesh};

    fn cube_cloud(n: usize, seed: u64) -> PartCloud {
        sample_mesh(&box_mesh(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)), n, seed).unwrap()
    }

    fn assert_connected(p: &SuperpointPartition, adj: &[Vec<usize>]) {
        for r in 0..p.regions.len() {
            let members: Vec<usize> = (0..p.assignment.len()).filter(|&i| p.assignment[i] == r).collect();
            let mut seen = vec![false; p.assignment.len()];
            let mut stack = vec![members[0]];
            seen[members[0]] = true;
            let mut count = 0;
            while let Some(u) = stack.pop() {
                count += 1;
                for &v in &adj[u] {
                    if !seen[v] && p.assignment[v] == r {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            assert_eq!(count, members.len(), "region {r} is disconnected");
        }
    }

    #[test]
    fn cube_faces_become_six_regions() {
        let cloud = cube_cloud(3000, 4);
        let part = superpoints(&cloud, 0.05, 10).unwrap();
        assert_eq!(part.regions.len(), 6);
        for r in &part.regions {
            // one axis-aligned normal per region
            assert!((r.mean_normal.abs().max() - 1.0).abs() < 1e-9);
        }
        assert_connected(&part, &knn_graph(&cloud.points, 10));
    }

    #[test]
    fn infinite_penalty_keeps_one_region() {
        let sphere = {
            let mut m = TriMesh::default();
            // octahedron is enough: every face normal differs
            m.vertices = vec![
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(-1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, -1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
                Point3::new(0.0, 0.0, -1.0),
            ];
            m.faces = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
            m
        };
        let cloud = sample_mesh(&sphere, 1500, 1).unwrap();
        let part = superpoints(&cloud, 1e12, 8).unwrap();
        assert_eq!(part.regions.len(), 1);
        assert_eq!(part.regions[0].count, 1500);
    }

    #[test]
    fn two_colored_sheet_splits_at_the_color_boundary() {
        let mut mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(0.5, 0.0, 0.0),
                Point3::new(0.5, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.5, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.5, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3], [4, 5, 6], [4, 6, 7]],
        );
        mesh.colors = Some(
            [[1.0, 0.0, 0.0]; 4]
                .into_iter()
                .chain([[0.0, 0.0, 1.0]; 4])
                .collect(),
        );
        let cloud = sample_mesh(&mesh, 2000, 3).unwrap();
        let part = superpoints(&cloud, 0.1, 10).unwrap();
        assert_eq!(part.regions.len(), 2);
        // energy check: the color split removes far more feature energy than its cut costs
        for (i, p) in cloud.points.iter().enumerate() {
            let r = &part.regions[part.assignment[i]];
            let red = r.mean_color[0] > 0.5;
            assert_eq!(red, p.x < 0.5);
        }
    }

    #[test]
    fn lower_lambda_never_reduces_region_count() {
        let cloud = cube_cloud(1200, 8).jittered(0.002, 1);
        let mut noisy = cloud.clone();
        for (i, c) in noisy.colors.iter_mut().enumerate() {
            c[1] = ((i * 7919) % 13) as f64 / 13.0;
        }
        let mut last = 0;
        for lambda in [100.0, 10.0, 1.0, 0.3, 0.1, 0.03, 0.01] {
            let n = superpoints(&noisy, lambda, 8).unwrap().regions.len();
            assert!(n >= last, "lambda {lambda}: {n} < {last}");
            last = n;
        }
    }

    #[test]
    fn representative_is_a_member_near_the_centroid() {
        let cloud = cube_cloud(600, 2);
        let part = superpoints(&cloud, 0.05, 10).unwrap();
        for (r, region) in part.regions.iter().enumerate() {
            assert_eq!(part.assignment[region.representative], r);
        }
    }

    #[test]
    fn empty_cloud_is_rejected() {
        assert!(matches!(superpoints(&PartCloud::default(), 1.0, 8), Err(Error::EmptyCloud)));
    }
}
