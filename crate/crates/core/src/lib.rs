//! Turn part-segmented meshes into articulated objects: render annotated views, ask a
//! vision-language oracle which points and arrows describe each joint, solve joint axes
//! from geometry, sweep limits for collisions and export URDF.

pub mod asset_io;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod geometry;
pub mod joints;
pub mod kinematics;
pub mod oracle;
pub mod pipeline;
pub mod viewprompt;

pub use error::{Error, Result};
