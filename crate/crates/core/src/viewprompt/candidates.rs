use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::raster::RenderedView;
use crate::error::{Error, Result};
use crate::geometry::kmeans;

pub const LABEL_BOX: (f64, f64) = (24.0, 16.0);
pub const DEFAULT_K_VALUES: [usize; 6] = [4, 6, 8, 12, 16, 24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    ConnectingAreaKMeans,
    Superpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    pub point: Point3<f64>,
    /// Continuous pixel coordinates; `[-1, -1]` when the point is behind the camera.
    pub pixel: [f64; 2],
    pub visible: bool,
    pub source: CandidateSource,
}

/// Numbered 3D points projected into one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub source: CandidateSource,
    pub k_used: usize,
}

/// Axis-aligned pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl LabelBox {
    /// Box of `LABEL_BOX` size centered on `pixel`, shifted to lie inside the image.
    pub fn around(pixel: [f64; 2], width: usize, height: usize) -> LabelBox {
        let (bw, bh) = LABEL_BOX;
        let x0 = (pixel[0] - bw / 2.0).clamp(0.0, (width as f64 - bw).max(0.0)).floor();
        let y0 = (pixel[1] - bh / 2.0).clamp(0.0, (height as f64 - bh).max(0.0)).floor();
        LabelBox {
            x0,
            y0,
            x1: x0 + bw,
            y1: y0 + bh,
        }
    }

    /// Intersection with positive area.
    pub fn overlaps(&self, other: &LabelBox) -> bool {
        self.x0.max(other.x0) < self.x1.min(other.x1) && self.y0.max(other.y0) < self.y1.min(other.y1)
    }
}

impl CandidateSet {
    pub fn get(&self, id: u32) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    pub fn visible(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.visible)
    }

    pub fn label_boxes(&self, width: usize, height: usize) -> Vec<(u32, LabelBox)> {
        self.visible()
            .map(|c| (c.id, LabelBox::around(c.pixel, width, height)))
            .collect()
    }

    pub fn boxes_disjoint(&self, width: usize, height: usize) -> bool {
        let boxes = self.label_boxes(width, height);
        boxes
            .iter()
            .enumerate()
            .all(|(i, (_, a))| boxes[i + 1..].iter().all(|(_, b)| !a.overlaps(b)))
    }

    /// Appends projected `extra` points whose label boxes do not collide with already
    /// visible labels; invisible or colliding points are dropped. Ids stay consecutive.
    pub fn merge_capped(&mut self, extra: &[Point3<f64>], view: &RenderedView, source: CandidateSource) {
        let (w, h) = (view.width(), view.height());
        let mut boxes: Vec<LabelBox> = self.label_boxes(w, h).into_iter().map(|(_, b)| b).collect();
        for p in extra {
            let c = project_point(p, view, 0, source);
            if !c.visible {
                continue;
            }
            let b = LabelBox::around(c.pixel, w, h);
            if boxes.iter().any(|o| o.overlaps(&b)) {
                continue;
            }
            boxes.push(b);
            let id = self.candidates.len() as u32 + 1;
            self.candidates.push(Candidate { id, ..c });
        }
    }
}

fn project_point(p: &Point3<f64>, view: &RenderedView, id: u32, source: CandidateSource) -> Candidate {
    let cam = &view.camera;
    let delta = view.depth_range().map_or(1e-6, |(lo, hi)| (1e-3 * (hi - lo)).max(1e-6));
    let Some((px, depth)) = cam.project(p) else {
        return Candidate {
            id,
            point: *p,
            pixel: [-1.0, -1.0],
            visible: false,
            source,
        };
    };
    let visible = cam.on_image(px) && {
        let (x, y) = (px[0] as usize, px[1] as usize);
        let here = view.depth[view.index(x, y)];
        if !here.is_finite() {
            true
        } else {
            // the deepest finite surface in the 3x3 neighborhood absorbs pixel-center quantization
            let mut reference = here;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < view.width() && (ny as usize) < view.height() {
                        let d = view.depth[view.index(nx as usize, ny as usize)];
                        if d.is_finite() {
                            reference = reference.max(d);
                        }
                    }
                }
            }
            depth <= reference + delta
        }
    };
    Candidate {
        id,
        point: *p,
        pixel: px,
        visible,
        source,
    }
}

/// Projects points with ids `1..=n` and tests visibility against the depth buffer.
pub fn project_candidates(points: &[Point3<f64>], view: &RenderedView, source: CandidateSource) -> CandidateSet {
    CandidateSet {
        candidates: points
            .iter()
            .enumerate()
            .map(|(i, p)| project_point(p, view, i as u32 + 1, source))
            .collect(),
        source,
        k_used: points.len(),
    }
}

/// Runs k-means for each `k` and keeps the largest `k` whose visible labels are pairwise
/// disjoint with at least two of them visible.
pub fn choose_candidate_count(
    area_points: &[Point3<f64>],
    view: &RenderedView,
    k_values: &[usize],
    seed: u64,
) -> Result<CandidateSet> {
    if k_values.is_empty() {
        return Err(Error::Config("k_values is empty".into()));
    }
    let mut ks: Vec<usize> = k_values.iter().copied().filter(|&k| k >= 1).collect();
    ks.sort_unstable();
    ks.dedup();
    let (w, h) = (view.width(), view.height());
    let mut accepted = None;
    for k in ks {
        if k > area_points.len() {
            break;
        }
        let km = kmeans(area_points, k, seed)?;
        let set = project_candidates(&km.centers, view, CandidateSource::ConnectingAreaKMeans);
        if set.visible().count() >= 2 && set.boxes_disjoint(w, h) {
            accepted = Some(set);
        }
    }
    accepted.ok_or_else(|| {
        Error::PromptDegenerate(format!(
            "no k in {k_values:?} yields two or more visible non-overlapping labels"
        ))
    })
}
