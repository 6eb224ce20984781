use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole camera; pixel `(0, 0)` is the top-left corner and `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Point3<f64>,
    pub look_at: Point3<f64>,
    pub up: Vector3<f64>,
    /// Degrees.
    pub vertical_fov: f64,
    pub image_size: (u32, u32),
}

/// Orthonormal camera frame: `right`, image-up and viewing direction.
#[derive(Debug, Clone, Copy)]
pub struct CameraBasis {
    pub right: Vector3<f64>,
    pub up: Vector3<f64>,
    pub forward: Vector3<f64>,
}

pub const NEAR: f64 = 1e-4;

impl Camera {
    pub fn new(
        position: Point3<f64>,
        look_at: Point3<f64>,
        up: Vector3<f64>,
        vertical_fov: f64,
        image_size: (u32, u32),
    ) -> Result<Camera> {
        let cam = Camera {
            position,
            look_at,
            up,
            vertical_fov,
            image_size,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.look_at - self.position).norm() <= 0.0 {
            return Err(Error::Config("camera position equals look_at".into()));
        }
        if !(self.vertical_fov > 10.0 && self.vertical_fov < 120.0) {
            return Err(Error::Config(format!("fov {} outside (10, 120)", self.vertical_fov)));
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(Error::Config("empty image".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> CameraBasis {
        let forward = (self.look_at - self.position).normalize();
        let mut right = forward.cross(&self.up);
        if right.norm() < 1e-9 {
            // up parallel to the view direction
            let alt = if forward.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            right = forward.cross(&alt);
        }
        let right = right.normalize();
        let up = right.cross(&forward);
        CameraBasis { right, up, forward }
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.image_size.1 as f64 / (0.5 * self.vertical_fov.to_radians()).tan()
    }

    pub fn width(&self) -> usize {
        self.image_size.0 as usize
    }

    pub fn height(&self) -> usize {
        self.image_size.1 as usize
    }

    /// Camera-space coordinates `(x right, y up, z forward)`.
    pub fn to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        let b = self.basis();
        let d = p - self.position;
        Vector3::new(d.dot(&b.right), d.dot(&b.up), d.dot(&b.forward))
    }

    /// Continuous pixel coordinates and view depth, `None` behind the near plane.
    pub fn project(&self, p: &Point3<f64>) -> Option<([f64; 2], f64)> {
        let c = self.to_camera(p);
        if c.z <= NEAR {
            return None;
        }
        Some((self.project_camera_space(&c), c.z))
    }

    pub fn project_camera_space(&self, c: &Vector3<f64>) -> [f64; 2] {
        let f = self.focal();
        [
            0.5 * self.image_size.0 as f64 + f * c.x / c.z,
            0.5 * self.image_size.1 as f64 - f * c.y / c.z,
        ]
    }

    pub fn on_image(&self, px: [f64; 2]) -> bool {
        px[0] >= 0.0 && px[1] >= 0.0 && px[0] < self.image_size.0 as f64 && px[1] < self.image_size.1 as f64
    }
}

/// Vertices of a subdivided icosahedron on the unit sphere: 12 at level 0, 42 at level 1,
/// 162 at level 2. Order is deterministic: parents first, then edge midpoints.
pub fn icosphere(level: u32) -> Vec<Vector3<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid = std::collections::BTreeMap::new();
        let mut edges: Vec<(usize, usize)> = faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        for (a, b) in edges {
            mid.insert((a, b), verts.len());
            verts.push((verts[a] + verts[b]).normalize());
        }
        let m = |a: usize, b: usize| mid[&(a.min(b), a.max(b))];
        faces = faces
            .iter()
            .flat_map(|&[a, b, c]| {
                let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
                [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
            })
            .collect();
    }
    verts
}

/// `n` cameras on an icosphere of radius `distance` around `center`, world `+z` up.
pub fn icosphere_cameras(
    center: Point3<f64>,
    distance: f64,
    n: usize,
    vertical_fov: f64,
    image_size: (u32, u32),
) -> Vec<Camera> {
    let mut level = 0;
    while icosphere_len(level) < n {
        level += 1;
    }
    icosphere(level)
        .into_iter()
        .take(n)
        .map(|d| {
            let up = if d.z.abs() > 0.999 { Vector3::y() } else { Vector3::z() };
            Camera {
                position: center + d * distance,
                look_at: center,
                up,
                vertical_fov,
                image_size,
            }
        })
        .collect()
}

fn icosphere_len(level: u32) -> usize {
    10 * 4usize.pow(level) + 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        assert_eq!(icosphere(0).len(), 12);
        assert_eq!(icosphere(1).len(), 42);
        assert_eq!(icosphere(2).len(), 162);
        assert!(icosphere(1).iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn look_at_projects_to_center() {
        let cam = Camera::new(Point3::new(0.3, -2.0, 1.0), Point3::new(0.1, 0.2, 0.0), Vector3::z(), 45.0, (640, 480))
            .unwrap();
        let (px, depth) = cam.project(&cam.look_at).unwrap();
        assert!((px[0] - 320.0).abs() < 1e-9 && (px[1] - 240.0).abs() < 1e-9);
        assert!((depth - (cam.look_at - cam.position).norm()).abs() < 1e-12);
    }

    #[test]
    fn point_behind_camera_does_not_project() {
        let cam = Camera::new(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y(), 45.0, (64, 64)).unwrap();
        assert!(cam.project(&Point3::new(0.0, 0.0, 3.0)).is_none());
    }

    #[test]
    fn invalid_cameras() {
        assert!(Camera::new(Point3::origin(), Point3::origin(), Vector3::z(), 45.0, (8, 8)).is_err());
        assert!(Camera::new(Point3::new(1.0, 0.0, 0.0), Point3::origin(), Vector3::z(), 5.0, (8, 8)).is_err());
    }

    #[test]
    fn image_up_points_up() {
        let cam = Camera::new(Point3::new(0.0, -3.0, 0.0), Point3::origin(), Vector3::z(), 45.0, (100, 100)).unwrap();
        let (above, _) = cam.project(&Point3::new(0.0, 0.0, 0.5)).unwrap();
        assert!(above[1] < 50.0);
        let (right, _) = cam.project(&Point3::new(0.5, 0.0, 0.0)).unwrap();
        assert!(right[0] > 50.0);
    }
}
