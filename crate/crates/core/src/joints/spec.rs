use serde::{Deserialize, Serialize};

use crate::geometry::Line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Fixed,
    Prismatic,
    Revolute,
    Continuous,
    Floating,
}

impl JointType {
    pub const ALL: [JointType; 5] = [
        JointType::Fixed,
        JointType::Prismatic,
        JointType::Revolute,
        JointType::Continuous,
        JointType::Floating,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JointType::Fixed => "fixed",
            JointType::Prismatic => "prismatic",
            JointType::Revolute => "revolute",
            JointType::Continuous => "continuous",
            JointType::Floating => "floating",
        }
    }

    pub fn parse(s: &str) -> Option<JointType> {
        let s = s.trim().to_ascii_lowercase();
        JointType::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Joints carrying one scalar of motion.
    pub fn is_actuated(self) -> bool {
        matches!(self, JointType::Prismatic | JointType::Revolute | JointType::Continuous)
    }

    pub fn requires_limits(self) -> bool {
        matches!(self, JointType::Prismatic | JointType::Revolute)
    }

    pub fn is_rotational(self) -> bool {
        matches!(self, JointType::Revolute | JointType::Continuous)
    }
}

impl std::fmt::Display for JointType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Axis taken verbatim from a provided tree or fixture.
    Declared,
    RevoluteTwoPoint,
    RevoluteSinglePoint,
    PrismaticInOut,
    PrismaticSurface,
    /// Fixed and floating joints carry no estimated axis.
    None,
}

/// Which solver produced a joint and which oracle exchanges it relied on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub solver: Solver,
    #[serde(default)]
    pub transcripts: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(solver: Solver) -> Self {
        Provenance {
            solver,
            transcripts: Vec::new(),
            notes: Vec::new(),
        }
    }
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance::new(Solver::Declared)
    }
}

/// One joint of the articulation tree.
///
/// `limits` use the prompt conventions: degrees for revolute joints and multiples of the
/// child link's extent along the axis for prismatic joints. The axis is expressed in the
/// parent link frame at rest, which coincides with the object frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    pub axis: Line,
    pub limits: Option<[f64; 2]>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl JointSpec {
    pub fn check(&self) -> Result<(), String> {
        if (self.axis.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(format!("joint {}: axis direction is not unit length", self.name));
        }
        if self.joint_type.requires_limits() {
            match self.limits {
                Some([lo, hi]) if lo.is_finite() && hi.is_finite() && lo <= hi => {}
                Some(l) => return Err(format!("joint {}: invalid limits {l:?}", self.name)),
                None => return Err(format!("joint {}: {} joint needs limits", self.name, self.joint_type)),
            }
        }
        Ok(())
    }
}
