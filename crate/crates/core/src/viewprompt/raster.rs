use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::{Camera, NEAR};
use crate::asset_io::SegmentedObject;

pub const BACKGROUND: [u8; 3] = [235, 235, 235];

/// Color, depth and part-id buffers of one render, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedView {
    pub color: Vec<[u8; 3]>,
    /// View depth along the camera axis, `f64::INFINITY` for background.
    pub depth: Vec<f64>,
    pub part_id: Vec<Option<u32>>,
    pub camera: Camera,
    /// Part names in `part_id` order.
    pub part_names: Vec<String>,
}

impl RenderedView {
    pub fn width(&self) -> usize {
        self.camera.width()
    }

    pub fn height(&self) -> usize {
        self.camera.height()
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width() + x
    }

    pub fn part_pixels(&self, part: u32) -> usize {
        self.part_id.iter().filter(|&&p| p == Some(part)).count()
    }

    pub fn part_index(&self, name: &str) -> Option<u32> {
        self.part_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    /// Smallest and largest finite depth.
    pub fn depth_range(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &d in self.depth.iter().filter(|d| d.is_finite()) {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        lo.is_finite().then_some((lo, hi))
    }
}

struct ClipVertex {
    cam: Vector3<f64>,
    color: [f64; 3],
}

fn clip_near(poly: Vec<ClipVertex>) -> Vec<ClipVertex> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        let a_in = a.cam.z >= NEAR;
        let b_in = b.cam.z >= NEAR;
        if a_in {
            out.push(ClipVertex {
                cam: a.cam,
                color: a.color,
            });
        }
        if a_in != b_in {
            let t = (NEAR - a.cam.z) / (b.cam.z - a.cam.z);
            out.push(ClipVertex {
                cam: a.cam + (b.cam - a.cam) * t,
                color: [0, 1, 2].map(|k| a.color[k] + (b.color[k] - a.color[k]) * t),
            });
        }
    }
    out
}

struct Target<'a> {
    camera: &'a Camera,
    color: Option<&'a mut Vec<[u8; 3]>>,
    depth: &'a mut Vec<f64>,
    part_id: &'a mut Vec<Option<u32>>,
}

fn raster_triangle(target: &mut Target<'_>, v: [&ClipVertex; 3], shade: f64, part: u32) {
    let cam = target.camera;
    let (w, h) = (cam.width(), cam.height());
    let s = v.map(|x| cam.project_camera_space(&x.cam));
    let area = (s[1][0] - s[0][0]) * (s[2][1] - s[0][1]) - (s[1][1] - s[0][1]) * (s[2][0] - s[0][0]);
    if area.abs() < 1e-14 {
        return;
    }
    let min_x = s.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let min_y = s.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let max_x = s.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).ceil();
    let max_y = s.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).ceil();
    if max_x < 0.0 || max_y < 0.0 {
        return;
    }
    let max_x = (max_x as usize).min(w.saturating_sub(1));
    let max_y = (max_y as usize).min(h.saturating_sub(1));
    let inv_z = v.map(|x| 1.0 / x.cam.z);
    for y in min_y..=max_y {
        let py = y as f64 + 0.5;
        for x in min_x..=max_x {
            let px = x as f64 + 0.5;
            let edge = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
            let w0 = edge(s[1], s[2]) / area;
            let w1 = edge(s[2], s[0]) / area;
            let w2 = edge(s[0], s[1]) / area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            // perspective-correct depth: 1/z is affine in screen space
            let z = 1.0 / (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]);
            let i = y * w + x;
            if z < target.depth[i] {
                target.depth[i] = z;
                target.part_id[i] = Some(part);
                if let Some(color) = target.color.as_deref_mut() {
                    let wz = [w0 * inv_z[0] * z, w1 * inv_z[1] * z, w2 * inv_z[2] * z];
                    color[i] = [0, 1, 2].map(|k| {
                        let c = wz[0] * v[0].color[k] + wz[1] * v[1].color[k] + wz[2] * v[2].color[k];
                        (c * shade * 255.0).round().clamp(0.0, 255.0) as u8
                    });
                }
            }
        }
    }
}

fn render(object: &SegmentedObject, camera: &Camera, with_color: bool) -> RenderedView {
    let n = camera.width() * camera.height();
    let mut color = if with_color { vec![BACKGROUND; n] } else { Vec::new() };
    let mut depth = vec![f64::INFINITY; n];
    let mut part_id = vec![None; n];
    let basis = camera.basis();
    {
        let mut target = Target {
            camera,
            color: with_color.then_some(&mut color),
            depth: &mut depth,
            part_id: &mut part_id,
        };
        for (pi, part) in object.parts.iter().enumerate() {
            let mesh = &part.mesh;
            for f in 0..mesh.faces.len() {
                let Some(normal) = mesh.face_normal(f) else {
                    continue;
                };
                let shade = 0.25 + 0.75 * normal.dot(&basis.forward).abs();
                let poly: Vec<ClipVertex> = mesh.faces[f]
                    .iter()
                    .map(|&vi| ClipVertex {
                        cam: camera.to_camera(&mesh.vertices[vi]),
                        color: mesh.vertex_color(vi),
                    })
                    .collect();
                let poly = if poly.iter().all(|v| v.cam.z >= NEAR) { poly } else { clip_near(poly) };
                for k in 1..poly.len().saturating_sub(1) {
                    raster_triangle(&mut target, [&poly[0], &poly[k], &poly[k + 1]], shade, pi as u32);
                }
            }
        }
    }
    RenderedView {
        color,
        depth,
        part_id,
        camera: *camera,
        part_names: object.parts.iter().map(|p| p.name.clone()).collect(),
    }
}

/// Z-buffered flat-shaded rasterization of every part triangle.
pub fn render_view(object: &SegmentedObject, camera: &Camera) -> RenderedView {
    render(object, camera, true)
}

/// Depth and part-id buffers only.
pub fn render_ids(object: &SegmentedObject, camera: &Camera) -> RenderedView {
    render(object, camera, false)
}

/// Exact depth of the first hit along the pixel-center ray through an axis-aligned box,
/// used as an analytic reference in tests.
pub fn ray_box_depth(camera: &Camera, px: [f64; 2], min: Point3<f64>, max: Point3<f64>) -> Option<f64> {
    let b = camera.basis();
    let f = camera.focal();
    let x = (px[0] - 0.5 * camera.image_size.0 as f64) / f;
    let y = -(px[1] - 0.5 * camera.image_size.1 as f64) / f;
    let dir = b.forward + b.right * x + b.up * y;
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for i in 0..3 {
        if dir[i].abs() < 1e-15 {
            if camera.position[i] < min[i] || camera.position[i] > max[i] {
                return None;
            }
            continue;
        }
        let a = (min[i] - camera.position[i]) / dir[i];
        let c = (max[i] - camera.position[i]) / dir[i];
        t0 = t0.max(a.min(c));
        t1 = t1.min(a.max(c));
    }
    // depth is the forward component of the hit; dir has unit forward component
    (t0 <= t1).then_some(t0)
}
