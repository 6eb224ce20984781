//! Software rendering, viewpoint selection, candidate projection and prompt-image annotation.

mod annotate;
mod camera;
mod candidates;
mod raster;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

pub use annotate::{
    annotate_arrows, annotate_labels, view_image, AnnotatedView, Arrow, ArrowColor, ImageManifest, ManifestArrow,
    ManifestCandidate, Mark,
};
pub use camera::{icosphere, icosphere_cameras, Camera, CameraBasis, NEAR};
pub use candidates::{
    choose_candidate_count, project_candidates, Candidate, CandidateSet, CandidateSource, LabelBox, DEFAULT_K_VALUES,
    LABEL_BOX,
};
pub use raster::{ray_box_depth, render_ids, render_view, RenderedView, BACKGROUND};

use crate::asset_io::SegmentedObject;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    pub n_views: usize,
    /// Camera distance as a multiple of the bounding-sphere radius.
    pub distance_factor: f64,
    pub vertical_fov: f64,
    pub image_size: (u32, u32),
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            n_views: 42,
            distance_factor: 2.5,
            vertical_fov: 45.0,
            image_size: (1024, 1024),
        }
    }
}

/// The fixed camera ring around an object: icosphere directions, looking at the box center.
pub fn view_cameras(object: &SegmentedObject, settings: &RenderSettings) -> Vec<Camera> {
    let center = object.aabb().map_or(Point3::origin(), |b| b.center());
    let radius = object
        .parts
        .iter()
        .flat_map(|p| p.mesh.vertices.iter())
        .map(|v| (v - center).norm())
        .fold(0.0, f64::max)
        .max(1e-6);
    icosphere_cameras(
        center,
        settings.distance_factor * radius,
        settings.n_views,
        settings.vertical_fov,
        settings.image_size,
    )
}

/// Camera showing the most pixels of `part`; ties go to the lowest camera index.
pub fn select_viewpoint(object: &SegmentedObject, part: &str, settings: &RenderSettings) -> Result<Camera> {
    if settings.n_views == 0 {
        return Err(Error::Config("n_views must be at least 1".into()));
    }
    let target = object
        .part_index(part)
        .ok_or_else(|| Error::UnknownLink(part.to_string()))? as u32;
    let mut best: Option<(usize, Camera)> = None;
    for cam in view_cameras(object, settings) {
        let count = render_ids(object, &cam).part_pixels(target);
        if count > 0 && best.as_ref().map_or(true, |(c, _)| count > *c) {
            best = Some((count, cam));
        }
    }
    best.map(|(_, c)| c).ok_or_else(|| Error::PartOccluded(part.to_string()))
}

#[cfg(test)]
mod tests {
    use nalgebra::{Point3, Vector3};

    use super::*;
    use crate::asset_io::{box_mesh, SampleOptions, TriMesh};
    use crate::geometry::Plane;

    fn object(parts: Vec<(&str, TriMesh)>) -> SegmentedObject {
        SegmentedObject::from_meshes(
            parts.into_iter().map(|(n, m)| (n.to_string(), m)).collect(),
            &SampleOptions {
                samples_per_part: 32,
                ..Default::default()
            },
            String::new(),
        )
        .unwrap()
    }

    fn small() -> RenderSettings {
        RenderSettings {
            image_size: (96, 96),
            ..Default::default()
        }
    }

    #[test]
    fn empty_scene_renders_background() {
        let obj = SegmentedObject {
            parts: Vec::new(),
            normalization: Default::default(),
            source_path: String::new(),
        };
        let cam = Camera::new(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y(), 45.0, (16, 16)).unwrap();
        let v = render_view(&obj, &cam);
        assert!(v.depth.iter().all(|d| d.is_infinite()));
        assert!(v.part_id.iter().all(|p| p.is_none()));
        assert!(v.color.iter().all(|c| *c == BACKGROUND));
    }

    #[test]
    fn cube_depth_matches_ray_box_intersection() {
        let obj = object(vec![("cube", box_mesh(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)))]);
        let aabb = obj.aabb().unwrap();
        let cam = Camera::new(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y(), 45.0, (65, 65)).unwrap();
        let v = render_view(&obj, &cam);
        let center = v.index(32, 32);
        assert_eq!(v.part_id[center], Some(0));
        let expected = ray_box_depth(&cam, [32.5, 32.5], aabb.min, aabb.max).unwrap();
        assert!((v.depth[center] - expected).abs() < 1e-9);
        // half-extent after normalization is 1/(2√3)
        assert!((expected - (2.0 - 0.5 / 3f64.sqrt())).abs() < 1e-3);
        for (d, p) in v.depth.iter().zip(&v.part_id) {
            assert_eq!(d.is_finite(), p.is_some());
        }
    }

    #[test]
    fn nearer_square_owns_overlap() {
        let near = box_mesh(Point3::new(-0.2, -0.2, 0.1), Point3::new(0.2, 0.2, 0.12));
        let far = box_mesh(Point3::new(-0.3, -0.3, -0.1), Point3::new(0.3, 0.3, -0.08));
        let obj = object(vec![("far", far), ("near", near)]);
        let cam = Camera::new(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y(), 30.0, (64, 64)).unwrap();
        let v = render_view(&obj, &cam);
        assert_eq!(v.part_id[v.index(32, 32)], Some(1));
        let a = render_view(&obj, &cam);
        assert_eq!(a, v);
    }

    #[test]
    fn projected_vertex_lands_on_its_pixel() {
        // right-angle corner at p; the triangle extends toward +x and +y (image right and up)
        let tri = TriMesh::new(
            vec![Point3::new(0.1, 0.05, 0.0), Point3::new(0.11, 0.05, 0.0), Point3::new(0.1, 0.06, 0.0)],
            vec![[0, 1, 2]],
        );
        let big = box_mesh(Point3::new(-0.5, -0.5, -1.0), Point3::new(0.5, 0.5, -0.9));
        let obj = object(vec![("big", big), ("dot", tri)]);
        let p = obj.parts[1].mesh.vertices[0];
        let cam = Camera::new(Point3::new(0.0, 0.0, 1.5), Point3::origin(), Vector3::y(), 45.0, (512, 512)).unwrap();
        let v = render_view(&obj, &cam);
        let (px, _) = cam.project(&p).unwrap();
        let hits: Vec<(f64, f64)> = (0..512)
            .flat_map(|y| (0..512).map(move |x| (x, y)))
            .filter(|&(x, y)| v.part_id[v.index(x, y)] == Some(1))
            .map(|(x, y)| (x as f64 + 0.5, y as f64 + 0.5))
            .collect();
        assert!(!hits.is_empty());
        let min_x = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
        let max_y = hits.iter().map(|h| h.1).fold(f64::NEG_INFINITY, f64::max);
        assert!((min_x - px[0]).abs() <= 1.0 && (max_y - px[1]).abs() <= 1.0);
    }

    #[test]
    fn lid_on_box_is_seen_from_above() {
        let base = box_mesh(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 0.6));
        let lid = box_mesh(Point3::new(0.0, 0.0, 0.6), Point3::new(1.0, 1.0, 0.65));
        let obj = object(vec![("base", base), ("lid", lid)]);
        let cam = select_viewpoint(&obj, "lid", &small()).unwrap();
        assert!(cam.position.z > cam.look_at.z);
        // reference counts straight from the rasterizer
        let counts: Vec<usize> = view_cameras(&obj, &small())
            .iter()
            .map(|c| render_ids(&obj, c).part_pixels(1))
            .collect();
        let best = counts.iter().copied().max().unwrap();
        let first = counts.iter().position(|&c| c == best).unwrap();
        assert_eq!(cam, view_cameras(&obj, &small())[first]);
    }

    #[test]
    fn single_part_selection_is_deterministic() {
        let obj = object(vec![("cube", box_mesh(Point3::origin(), Point3::new(1.0, 1.0, 1.0)))]);
        let a = select_viewpoint(&obj, "cube", &small()).unwrap();
        let b = select_viewpoint(&obj, "cube", &small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn enclosed_part_is_occluded() {
        let shell = box_mesh(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0));
        let core = box_mesh(Point3::new(-0.2, -0.2, -0.2), Point3::new(0.2, 0.2, 0.2));
        let obj = object(vec![("shell", shell), ("core", core)]);
        let err = select_viewpoint(&obj, "core", &small()).unwrap_err();
        assert!(err.to_string().contains("part fully occluded"));
    }

    fn wall_with_panel() -> SegmentedObject {
        let wall = box_mesh(Point3::new(-1.0, 0.0, -0.6), Point3::new(1.0, 0.05, 0.6));
        let panel = box_mesh(Point3::new(-0.4, -0.03, -0.4), Point3::new(0.4, 0.0, 0.4));
        object(vec![("wall", wall), ("panel", panel)])
    }

    #[test]
    fn arrows_follow_image_axes() {
        let obj = wall_with_panel();
        let cam = Camera::new(Point3::new(0.0, -2.0, 0.0), Point3::origin(), Vector3::z(), 45.0, (128, 128)).unwrap();
        let view = render_view(&obj, &cam);
        let plane = Plane {
            centroid: Point3::origin(),
            normal: Vector3::y(),
        };
        let a = annotate_arrows(&view, &obj.parts[1], &plane).unwrap();
        assert_eq!(a.arrows.len(), 4);
        let up = a.arrow(ArrowColor::Red).unwrap();
        assert!(up.direction3d.dot(&Vector3::z()) > 0.99);
        assert!(up.end[1] < up.start[1]);
        assert!(a.arrow(ArrowColor::Green).unwrap().direction3d.dot(&Vector3::x()) > 0.99);
        let starts: Vec<_> = a.arrows.iter().map(|x| x.start).collect();
        assert!(starts.iter().all(|s| *s == starts[0]));
        assert!((starts[0][0] - 64.0).abs() < 2.0 && (starts[0][1] - 64.0).abs() < 2.0);
        for arrow in &a.arrows {
            let px = a.image.get_pixel(arrow.end[0] as u32, arrow.end[1] as u32).0;
            assert_eq!(px, arrow.color.rgb());
        }
    }

    #[test]
    fn arrows_need_a_visible_part() {
        let obj = wall_with_panel();
        let cam = Camera::new(Point3::new(0.0, 3.0, 0.0), Point3::origin(), Vector3::z(), 45.0, (64, 64)).unwrap();
        let view = render_view(&obj, &cam);
        let plane = Plane {
            centroid: Point3::origin(),
            normal: Vector3::y(),
        };
        let err = annotate_arrows(&view, &obj.parts[1], &plane).unwrap_err();
        assert!(matches!(err, Error::PartOccluded(_)));
    }

    #[test]
    fn labels_are_counted_and_deterministic() {
        let obj = object(vec![("cube", box_mesh(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)))]);
        let cam = Camera::new(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y(), 45.0, (200, 200)).unwrap();
        let view = render_view(&obj, &cam);
        let h = 0.5 / 3f64.sqrt();
        let pts = [Point3::new(-0.15, 0.0, h), Point3::new(0.0, 0.1, h), Point3::new(0.15, 0.0, h), Point3::new(0.0, 0.0, -h)];
        let set = project_candidates(&pts, &view, CandidateSource::ConnectingAreaKMeans);
        let a = annotate_labels(&view, &set);
        assert_eq!(a.marks.iter().map(|m| m.id).collect::<Vec<_>>(), vec![1, 2, 3]);
        for m in &a.marks {
            assert!(m.label_box.x0 >= 0.0 && m.label_box.x1 <= 200.0 && m.label_box.y0 >= 0.0 && m.label_box.y1 <= 200.0);
        }
        let b = annotate_labels(&view, &set);
        assert_eq!(a.png_bytes().unwrap(), b.png_bytes().unwrap());
        let manifest = a.manifest("x.png");
        assert_eq!(manifest.candidates.len(), 3);
        assert_eq!(manifest.candidates[1].point, pts[1]);

        let none = project_candidates(&pts[3..], &view, CandidateSource::ConnectingAreaKMeans);
        let plain = annotate_labels(&view, &none);
        assert!(plain.marks.is_empty());
        assert_eq!(plain.image, view_image(&view));
    }

    #[test]
    fn arrow_colors_parse_case_insensitively() {
        assert_eq!(ArrowColor::parse(" Red "), Some(ArrowColor::Red));
        assert_eq!(ArrowColor::parse("purple"), None);
    }
}
