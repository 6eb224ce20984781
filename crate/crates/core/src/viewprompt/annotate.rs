use std::io::Cursor;

use image::{ImageFormat, RgbImage};
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::Camera;
use super::candidates::{CandidateSet, LabelBox};
use super::raster::RenderedView;
use crate::asset_io::PartSegment;
use crate::error::{Error, Result};
use crate::geometry::Plane;

/// The four arrow colors named in the sliding-direction prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrowColor {
    Red,
    Yellow,
    Blue,
    Green,
}

impl ArrowColor {
    /// Drawing order, which is also the image direction order up, down, left, right.
    pub const ALL: [ArrowColor; 4] = [ArrowColor::Red, ArrowColor::Yellow, ArrowColor::Blue, ArrowColor::Green];

    pub fn as_str(self) -> &'static str {
        match self {
            ArrowColor::Red => "red",
            ArrowColor::Yellow => "yellow",
            ArrowColor::Blue => "blue",
            ArrowColor::Green => "green",
        }
    }

    pub fn parse(s: &str) -> Option<ArrowColor> {
        let s = s.trim().to_ascii_lowercase();
        ArrowColor::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            ArrowColor::Red => [220, 30, 30],
            ArrowColor::Yellow => [240, 200, 0],
            ArrowColor::Blue => [30, 70, 230],
            ArrowColor::Green => [20, 170, 50],
        }
    }

    /// Unit image-plane direction, `y` pointing down.
    fn image_direction(self) -> [f64; 2] {
        match self {
            ArrowColor::Red => [0.0, -1.0],
            ArrowColor::Yellow => [0.0, 1.0],
            ArrowColor::Blue => [-1.0, 0.0],
            ArrowColor::Green => [1.0, 0.0],
        }
    }
}

impl std::fmt::Display for ArrowColor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub id: u32,
    pub pixel: [f64; 2],
    pub label_box: LabelBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub color: ArrowColor,
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// World direction of the arrow within the camera plane.
    pub direction3d: Vector3<f64>,
    /// `direction3d` projected onto the sliding plane and normalized, `None` when it vanishes.
    pub on_plane: Option<Vector3<f64>>,
}

/// A rendered view with numbered marks or colored arrows drawn on top.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedView {
    pub image: RgbImage,
    pub camera: Camera,
    pub marks: Vec<Mark>,
    pub arrows: Vec<Arrow>,
    /// Candidate ids and 3D points, kept so oracle answers can be resolved.
    pub points: Vec<(u32, Point3<f64>)>,
}

/// JSON sidecar written next to every prompt image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageManifest {
    pub image: String,
    pub camera: Camera,
    pub candidates: Vec<ManifestCandidate>,
    pub arrows: Vec<ManifestArrow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCandidate {
    pub id: u32,
    pub point: Point3<f64>,
    pub pixel: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestArrow {
    pub color: ArrowColor,
    pub direction: Vector3<f64>,
}

impl AnnotatedView {
    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.image.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn manifest(&self, image_name: &str) -> ImageManifest {
        ImageManifest {
            image: image_name.to_string(),
            camera: self.camera,
            candidates: self
                .marks
                .iter()
                .map(|m| ManifestCandidate {
                    id: m.id,
                    point: self.points.iter().find(|(id, _)| *id == m.id).map(|(_, p)| *p).unwrap_or_else(Point3::origin),
                    pixel: m.pixel,
                })
                .collect(),
            arrows: self
                .arrows
                .iter()
                .map(|a| ManifestArrow {
                    color: a.color,
                    direction: a.direction3d,
                })
                .collect(),
        }
    }

    pub fn arrow(&self, color: ArrowColor) -> Option<&Arrow> {
        self.arrows.iter().find(|a| a.color == color)
    }
}

pub fn view_image(view: &RenderedView) -> RgbImage {
    let (w, h) = (view.width() as u32, view.height() as u32);
    RgbImage::from_fn(w, h, |x, y| image::Rgb(view.color[view.index(x as usize, y as usize)]))
}

// 3x5 bitmaps, one row per entry, most significant bit on the left
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

fn put(img: &mut RgbImage, x: i64, y: i64, rgb: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, image::Rgb(rgb));
    }
}

fn fill_rect(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [u8; 3]) {
    for y in y0..y1 {
        for x in x0..x1 {
            put(img, x, y, rgb);
        }
    }
}

fn draw_number(img: &mut RgbImage, b: &LabelBox, id: u32) {
    let text = id.to_string();
    let scale = if text.len() <= 2 { 2 } else { 1 };
    let glyph_w = 3 * scale + scale;
    let total = glyph_w * text.len() as i64 - scale;
    let x_start = b.x0 as i64 + ((b.x1 - b.x0) as i64 - total) / 2;
    let y_start = b.y0 as i64 + ((b.y1 - b.y0) as i64 - 5 * scale) / 2;
    for (i, ch) in text.bytes().enumerate() {
        let glyph = DIGITS[(ch - b'0') as usize];
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits >> (2 - col) & 1 == 1 {
                    let x = x_start + i as i64 * glyph_w + col * scale;
                    let y = y_start + row as i64 * scale;
                    fill_rect(img, x, y, x + scale, y + scale, [0, 0, 0]);
                }
            }
        }
    }
}

/// Draws a white label box with a red border and the candidate id at every visible candidate.
pub fn annotate_labels(view: &RenderedView, candidates: &CandidateSet) -> AnnotatedView {
    let mut image = view_image(view);
    let (w, h) = (view.width(), view.height());
    let mut marks = Vec::new();
    for c in candidates.visible() {
        let b = LabelBox::around(c.pixel, w, h);
        let (x0, y0, x1, y1) = (b.x0 as i64, b.y0 as i64, b.x1 as i64, b.y1 as i64);
        fill_rect(&mut image, x0, y0, x1, y1, [200, 20, 20]);
        fill_rect(&mut image, x0 + 2, y0 + 2, x1 - 2, y1 - 2, [255, 255, 255]);
        draw_number(&mut image, &b, c.id);
        marks.push(Mark {
            id: c.id,
            pixel: c.pixel,
            label_box: b,
        });
    }
    AnnotatedView {
        image,
        camera: view.camera,
        marks,
        arrows: Vec::new(),
        points: candidates.candidates.iter().map(|c| (c.id, c.point)).collect(),
    }
}

fn draw_thick_line(img: &mut RgbImage, a: [f64; 2], b: [f64; 2], half: f64, rgb: [u8; 3]) {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let steps = (len * 2.0).ceil().max(1.0) as usize;
    let r = half.ceil() as i64;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let (cx, cy) = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t);
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx * dx + dy * dy) as f64 <= half * half {
                    put(img, cx.floor() as i64 + dx, cy.floor() as i64 + dy, rgb);
                }
            }
        }
    }
}

/// Draws four arrows from the part's projected centroid along image up, down, left and right
/// in red, yellow, blue and green.
pub fn annotate_arrows(view: &RenderedView, part: &PartSegment, plane: &Plane) -> Result<AnnotatedView> {
    let visible = view.part_index(&part.name).map_or(0, |i| view.part_pixels(i));
    if visible == 0 {
        return Err(Error::PartOccluded(part.name.clone()));
    }
    let centroid = part.mesh.surface_centroid();
    let start = match view.camera.project(&centroid) {
        Some((px, _)) if view.camera.on_image(px) => px,
        _ => return Err(Error::CentroidOffImage(part.name.clone())),
    };
    let basis = view.camera.basis();
    let length = 0.12 * view.height().min(view.width()) as f64;
    let mut image = view_image(view);
    let mut arrows = Vec::new();
    for color in ArrowColor::ALL {
        let d = color.image_direction();
        let end = [start[0] + d[0] * length, start[1] + d[1] * length];
        let direction3d = (basis.right * d[0] - basis.up * d[1]).normalize();
        let rgb = color.rgb();
        let half = (view.height() as f64 / 256.0).max(1.0);
        draw_thick_line(&mut image, start, end, half, rgb);
        // arrowhead as two short strokes
        let back = [-d[0], -d[1]];
        let side = [-d[1], d[0]];
        let head = 0.25 * length;
        for s in [-1.0, 1.0] {
            let tip = [
                end[0] + (back[0] + s * side[0]) * head * 0.7,
                end[1] + (back[1] + s * side[1]) * head * 0.7,
            ];
            draw_thick_line(&mut image, end, tip, half, rgb);
        }
        let in_plane = direction3d - plane.normal * direction3d.dot(&plane.normal);
        arrows.push(Arrow {
            color,
            start,
            end,
            direction3d,
            on_plane: (in_plane.norm() > 1e-9).then(|| in_plane.normalize()),
        });
    }
    Ok(AnnotatedView {
        image,
        camera: view.camera,
        marks: Vec::new(),
        arrows,
        points: Vec::new(),
    })
}
