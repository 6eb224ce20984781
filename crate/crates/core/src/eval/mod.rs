//! Axis angle / position metrics and the batch evaluation harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Line;
use crate::joints::JointType;

/// Unsigned angle between axis directions in degrees, within `[0, 90]`.
pub fn axis_angle_error(pred: &Line, gt: &Line) -> f64 {
    let a = pred.direction.normalize();
    let b = gt.direction.normalize();
    // atan2 keeps precision near 0 where acos does not
    a.cross(&b).norm().atan2(a.dot(&b).abs()).to_degrees()
}

const PARALLEL: f64 = 1e-9;

/// Distance between two infinite lines; parallel lines fall back to point-to-line distance.
pub fn axis_position_error(pred: &Line, gt: &Line) -> f64 {
    let a = pred.direction.normalize();
    let b = gt.direction.normalize();
    let n = a.cross(&b);
    let w = gt.origin - pred.origin;
    let s = n.norm();
    if s > PARALLEL {
        return (w.dot(&n) / s).abs();
    }
    0.5 * (pred.distance_to_point(&gt.origin) + gt.distance_to_point(&pred.origin))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPrediction {
    pub id: String,
    pub joint_type: JointType,
    pub predicted: Line,
    pub ground_truth: Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointErrors {
    pub id: String,
    pub joint_type: JointType,
    pub angle_error: f64,
    /// Rotational joints only.
    pub position_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub count: usize,
    pub mean_angle_error: f64,
    pub mean_position_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub mean_angle_error: f64,
    /// Over revolute and continuous joints; `None` when there are none.
    pub mean_position_error: Option<f64>,
    /// `mean_position_error` mapped back to source units, when the normalization is known.
    pub mean_position_error_raw: Option<f64>,
    pub per_type: BTreeMap<String, TypeStats>,
    pub joints: Vec<JointErrors>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn stats(joints: &[&JointErrors]) -> TypeStats {
    TypeStats {
        count: joints.len(),
        mean_angle_error: mean(joints.iter().map(|j| j.angle_error)).unwrap_or(0.0),
        mean_position_error: mean(joints.iter().filter_map(|j| j.position_error)),
    }
}

pub fn evaluate_run(predictions: &[JointPrediction]) -> Result<EvalReport> {
    if predictions.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    let joints: Vec<JointErrors> = predictions
        .iter()
        .map(|p| JointErrors {
            id: p.id.clone(),
            joint_type: p.joint_type,
            angle_error: axis_angle_error(&p.predicted, &p.ground_truth),
            position_error: p
                .joint_type
                .is_rotational()
                .then(|| axis_position_error(&p.predicted, &p.ground_truth)),
        })
        .collect();
    let mut per_type = BTreeMap::new();
    for t in JointType::ALL {
        let of_type: Vec<&JointErrors> = joints.iter().filter(|j| j.joint_type == t).collect();
        if !of_type.is_empty() {
            per_type.insert(t.to_string(), stats(&of_type));
        }
    }
    let all: Vec<&JointErrors> = joints.iter().collect();
    let overall = stats(&all);
    Ok(EvalReport {
        count: joints.len(),
        mean_angle_error: overall.mean_angle_error,
        mean_position_error: overall.mean_position_error,
        mean_position_error_raw: None,
        per_type,
        joints,
    })
}

impl EvalReport {
    /// Fills the raw-unit position error given the normalization scale
    /// (normalized = scale × source).
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.mean_position_error_raw = self.mean_position_error.map(|e| e / scale);
        self
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:<11} {:>12} {:>14}", "joint", "type", "angle (deg)", "position");
        for j in &self.joints {
            let pos = j.position_error.map_or("-".to_string(), |p| format!("{p:.6}"));
            let _ = writeln!(s, "{:<24} {:<11} {:>12.4} {:>14}", j.id, j.joint_type.as_str(), j.angle_error, pos);
        }
        let pos = self.mean_position_error.map_or("-".to_string(), |p| format!("{p:.6}"));
        let _ = writeln!(s, "{:<24} {:<11} {:>12.4} {:>14}", "mean", "", self.mean_angle_error, pos);
        if let Some(raw) = self.mean_position_error_raw {
            let _ = writeln!(s, "{:<24} {:<11} {:>12} {:>14.6}", "mean (source units)", "", "", raw);
        }
        s
    }
}

/// One joint axis as stored in prediction / ground-truth files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub id: String,
    pub joint_type: JointType,
    pub origin: [f64; 3],
    pub direction: [f64; 3],
}

impl JointRecord {
    pub fn from_line(id: &str, joint_type: JointType, line: &Line) -> Self {
        JointRecord {
            id: id.to_string(),
            joint_type,
            origin: line.origin.coords.into(),
            direction: line.direction.into(),
        }
    }

    pub fn line(&self) -> Line {
        Line::new(Point3::from(self.origin), Vector3::from(self.direction))
    }
}

/// A record file: the joints plus, optionally, the normalization scale of the object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    #[serde(default)]
    pub normalization_scale: Option<f64>,
    pub joints: Vec<JointRecord>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecordFileOrList {
    File(RecordFile),
    List(Vec<JointRecord>),
}

pub fn read_records(path: &Path) -> Result<RecordFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(match serde_json::from_str::<RecordFileOrList>(&text)? {
        RecordFileOrList::File(f) => f,
        RecordFileOrList::List(joints) => RecordFile {
            normalization_scale: None,
            joints,
        },
    })
}

/// Pairs predictions with ground truth by id; both sides must name the same joints.
pub fn pair_records(pred: &[JointRecord], gt: &[JointRecord]) -> Result<Vec<JointPrediction>> {
    let mut pred_ids: Vec<&str> = pred.iter().map(|r| r.id.as_str()).collect();
    let mut gt_ids: Vec<&str> = gt.iter().map(|r| r.id.as_str()).collect();
    pred_ids.sort_unstable();
    gt_ids.sort_unstable();
    if pred_ids != gt_ids {
        return Err(Error::MismatchedIds(format!("predicted {pred_ids:?}, ground truth {gt_ids:?}")));
    }
    gt.iter()
        .map(|g| {
            let p = pred.iter().find(|p| p.id == g.id).expect("ids matched");
            Ok(JointPrediction {
                id: g.id.clone(),
                joint_type: g.joint_type,
                predicted: p.line(),
                ground_truth: g.line(),
            })
        })
        .collect()
}

/// Evaluates a prediction file against a ground-truth file.
pub fn evaluate_files(pred_path: &Path, gt_path: &Path) -> Result<EvalReport> {
    let pred = read_records(pred_path)?;
    let gt = read_records(gt_path)?;
    let report = evaluate_run(&pair_records(&pred.joints, &gt.joints)?)?;
    Ok(match gt.normalization_scale.or(pred.normalization_scale) {
        Some(s) => report.with_scale(s),
        None => report,
    })
}
