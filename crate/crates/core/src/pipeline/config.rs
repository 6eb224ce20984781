use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asset_io::SampleOptions;
use crate::error::{Error, Result};
use crate::geometry::{DEFAULT_MAX_DOUBLINGS, DEFAULT_TAU0};
use crate::joints::SweepSettings;
use crate::kinematics::SphereTarget;
use crate::oracle::{HingeTopology, PrismaticClass, RemoteConfig};
use crate::viewprompt::{RenderSettings, DEFAULT_K_VALUES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Remote,
    Mock,
    Replay,
}

impl std::fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendChoice::Remote => "remote",
            BackendChoice::Mock => "mock",
            BackendChoice::Replay => "replay",
        })
    }
}

impl std::str::FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "remote" => Ok(BackendChoice::Remote),
            "mock" => Ok(BackendChoice::Mock),
            "replay" => Ok(BackendChoice::Replay),
            other => Err(format!("unknown oracle backend {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub mesh: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub object_name: String,
    /// A fenced articulation-tree block; when absent the oracle is asked for one.
    pub tree: Option<PathBuf>,
    /// Fixture truth answering mock-oracle queries.
    pub truth: Option<PathBuf>,
    /// Link name → part names; links not listed take the part of the same name.
    pub link_parts: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub backend: BackendChoice,
    /// Stored transcripts read by the replay backend.
    pub transcripts: Option<PathBuf>,
    pub remote: RemoteConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub tau0: f64,
    pub max_doublings: u32,
    pub k_values: Vec<usize>,
    pub superpoint_lambda: f64,
    pub superpoint_knn: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            tau0: DEFAULT_TAU0,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
            k_values: DEFAULT_K_VALUES.to_vec(),
            superpoint_lambda: 0.05,
            superpoint_knn: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Joints estimated at once.
    pub concurrency: usize,
    /// Output of an earlier `prompts` run to reuse instead of re-rendering.
    pub prompts_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            out_dir: PathBuf::from("run"),
            concurrency: 4,
            prompts_dir: None,
        }
    }
}

/// Answers assumed by the `prompts` stage, which never calls the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct JointHints {
    pub topology: Option<HingeTopology>,
    pub prismatic: Option<PrismaticHint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrismaticHint {
    InOut,
    Surface,
}

impl From<PrismaticHint> for PrismaticClass {
    fn from(h: PrismaticHint) -> Self {
        match h {
            PrismaticHint::InOut => PrismaticClass::InOut,
            PrismaticHint::Surface => PrismaticClass::Surface,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub iterations: usize,
    pub rate: f64,
    pub penetration_weight: f64,
    /// Empty means one sphere per non-root part, centered on it.
    pub targets: Vec<SphereTarget>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            iterations: 200,
            rate: 0.1,
            penetration_weight: 1.0,
            targets: Vec::new(),
        }
    }
}

/// Everything a run needs; relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    pub oracle: OracleConfig,
    pub sampling: SampleOptions,
    pub geometry: GeometryConfig,
    pub sweep: SweepSettings,
    pub render: RenderSettings,
    pub run: RunSection,
    pub joints: BTreeMap<String, JointHints>,
    pub refine: RefineConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<BackendChoice>,
    pub out_dir: Option<PathBuf>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, resolves paths, applies overrides and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.input.mesh);
        resolve(base, &mut self.input.labels);
        resolve(base, &mut self.input.tree);
        resolve(base, &mut self.input.truth);
        resolve(base, &mut self.oracle.transcripts);
        resolve(base, &mut self.run.prompts_dir);
        if self.run.out_dir.is_relative() {
            self.run.out_dir = base.join(&self.run.out_dir);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
            self.sampling.seed = seed;
        }
        if let Some(b) = o.backend {
            self.oracle.backend = b;
        }
        if let Some(out) = &o.out_dir {
            self.run.out_dir = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.input.mesh.is_none() || self.input.labels.is_none() {
            return fail("input.mesh and input.labels are required".into());
        }
        if self.input.object_name.trim().is_empty() {
            return fail("input.object_name is required".into());
        }
        match self.oracle.backend {
            BackendChoice::Mock if self.input.truth.is_none() => {
                return fail("the mock oracle needs input.truth".into())
            }
            BackendChoice::Replay if self.oracle.transcripts.is_none() => {
                return fail("the replay oracle needs oracle.transcripts".into())
            }
            BackendChoice::Remote if self.oracle.remote.endpoint.trim().is_empty() => {
                return fail("the remote oracle needs oracle.remote.endpoint".into())
            }
            _ => {}
        }
        let g = &self.geometry;
        if !(g.tau0 > 0.0) {
            return fail(format!("geometry.tau0 must be positive, got {}", g.tau0));
        }
        if g.k_values.is_empty() || g.k_values.contains(&0) {
            return fail("geometry.k_values must be non-empty and positive".into());
        }
        if !(g.superpoint_lambda >= 0.0) || g.superpoint_knn == 0 {
            return fail("superpoint settings must be non-negative with k_nn ≥ 1".into());
        }
        if !(self.sweep.step > 0.0) || !(self.sweep.eps >= 0.0) || !(0.0..=1.0).contains(&self.sweep.pen_threshold) {
            return fail("sweep.step must be positive, eps non-negative, pen_threshold in [0, 1]".into());
        }
        if self.render.n_views == 0 || self.render.image_size.0 == 0 || self.render.image_size.1 == 0 {
            return fail("render.n_views and render.image_size must be positive".into());
        }
        if self.run.concurrency == 0 {
            return fail("run.concurrency must be at least 1".into());
        }
        if self.sampling.samples_per_part == 0 || self.sampling.density.is_some_and(|d| !(d > 0.0)) {
            return fail("sampling needs a positive sample count and density".into());
        }
        Ok(())
    }
}
