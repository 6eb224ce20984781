use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunContext;
use crate::asset_io::{PartCloud, SegmentedObject};
use crate::error::{Error, Result};
use crate::geometry::{snap_to_surface, superpoints, ConnectingArea};
use crate::oracle::{HingeExpectation, JointDecl, PromptImage};
use crate::viewprompt::{
    annotate_arrows, annotate_labels, choose_candidate_count, render_view, select_viewpoint, AnnotatedView, CandidateSet,
    CandidateSource, ImageManifest,
};

/// Which annotated image a joint is prompted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    /// Numbered connecting-area candidates; two or more are selected.
    HingeBoth,
    /// Connecting-area and superpoint candidates; exactly one is selected.
    HingeSingle,
    /// Four colored sliding directions.
    Arrows,
}

impl PromptVariant {
    pub fn stem(self) -> &'static str {
        match self {
            PromptVariant::HingeBoth => "hinge_both",
            PromptVariant::HingeSingle => "hinge_single",
            PromptVariant::Arrows => "arrows",
        }
    }

    pub fn hinge(self) -> HingeExpectation {
        match self {
            PromptVariant::HingeSingle => HingeExpectation::ExactlyOne,
            _ => HingeExpectation::AtLeastTwo,
        }
    }
}

/// Sidecar of a saved prompt image: everything needed to resolve an answer to geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptArtifact {
    /// Hash of the object, joint, variant and every setting that shapes the image.
    pub key: String,
    pub joint: String,
    pub variant: PromptVariant,
    pub image: String,
    pub manifest: ImageManifest,
    pub candidates: Option<CandidateSet>,
}

#[derive(Debug, Clone)]
pub struct PreparedPrompt {
    pub artifact: PromptArtifact,
    pub png: Vec<u8>,
    /// Set when the image came from an earlier prompts run.
    pub reused: bool,
}

impl PreparedPrompt {
    pub fn image(&self) -> PromptImage {
        PromptImage::from_png(&self.artifact.image, self.png.clone(), Some(self.artifact.manifest.clone()))
    }

    /// Writes `<dir>/<joint>/<variant>.png` and `.json`; returns the PNG path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let jdir = dir.join(&self.artifact.joint);
        std::fs::create_dir_all(&jdir).map_err(|e| Error::io(&jdir, e))?;
        let stem = self.artifact.variant.stem();
        let png = jdir.join(format!("{stem}.png"));
        std::fs::write(&png, &self.png).map_err(|e| Error::io(&png, e))?;
        let json = jdir.join(format!("{stem}.json"));
        std::fs::write(&json, serde_json::to_string_pretty(&self.artifact)? + "\n").map_err(|e| Error::io(&json, e))?;
        Ok(png)
    }

    fn load(dir: &Path, joint: &str, variant: PromptVariant, key: &str) -> Option<PreparedPrompt> {
        let jdir = dir.join(joint);
        let text = std::fs::read_to_string(jdir.join(format!("{}.json", variant.stem()))).ok()?;
        let artifact: PromptArtifact = serde_json::from_str(&text).ok()?;
        if artifact.key != key {
            return None;
        }
        let png = std::fs::read(jdir.join(format!("{}.png", variant.stem()))).ok()?;
        Some(PreparedPrompt {
            artifact,
            png,
            reused: true,
        })
    }
}

/// Digest of the geometry and samples an object's prompts are rendered from.
pub fn object_digest(object: &SegmentedObject) -> String {
    let mut h = Sha256::new();
    for part in &object.parts {
        h.update(part.name.as_bytes());
        h.update([0u8]);
        for v in &part.mesh.vertices {
            v.coords.iter().for_each(|x| h.update(x.to_le_bytes()));
        }
        for f in &part.mesh.faces {
            f.iter().for_each(|i| h.update((*i as u64).to_le_bytes()));
        }
        for p in &part.cloud.points {
            p.coords.iter().for_each(|x| h.update(x.to_le_bytes()));
        }
    }
    hex::encode(h.finalize())
}

fn artifact_key(ctx: &RunContext, decl: &JointDecl, variant: PromptVariant) -> Result<String> {
    let c = &ctx.config;
    let settings = serde_json::to_string(&(
        decl,
        variant,
        &c.render,
        &c.geometry,
        c.run.seed,
        &c.input.object_name,
    ))?;
    let mut h = Sha256::new();
    h.update(ctx.digest.as_bytes());
    h.update(settings.as_bytes());
    Ok(hex::encode(h.finalize()))
}

/// Renders the annotated image for a joint, or reuses a matching one from the configured
/// prompts directory.
pub fn prepare_prompt(
    ctx: &RunContext,
    decl: &JointDecl,
    variant: PromptVariant,
    area: &ConnectingArea,
) -> Result<PreparedPrompt> {
    let key = artifact_key(ctx, decl, variant)?;
    if let Some(dir) = &ctx.config.run.prompts_dir {
        if let Some(p) = PreparedPrompt::load(dir, &decl.name, variant, &key) {
            log::info!("joint {}: reusing {} prompt image", decl.name, variant.stem());
            return Ok(p);
        }
    }
    let object = &ctx.object;
    let g = &ctx.config.geometry;
    let part = ctx.primary_part(&decl.child)?;
    let camera = select_viewpoint(object, &part.name, &ctx.config.render)?;
    let view = render_view(object, &camera);
    let (annotated, candidates): (AnnotatedView, Option<CandidateSet>) = match variant {
        PromptVariant::HingeBoth => {
            let set = choose_candidate_count(&area.points, &view, &g.k_values, ctx.config.run.seed)?;
            (annotate_labels(&view, &set), Some(set))
        }
        PromptVariant::HingeSingle => {
            let mut set = choose_candidate_count(&area.points, &view, &g.k_values, ctx.config.run.seed).unwrap_or(CandidateSet {
                candidates: Vec::new(),
                source: CandidateSource::ConnectingAreaKMeans,
                k_used: 0,
            });
            let cloud = PartCloud::concat(ctx.link_segments(&decl.child).iter().map(|p| &p.cloud));
            let partition = superpoints(&cloud, g.superpoint_lambda, g.superpoint_knn)?;
            // noisy samples can sit just under the surface and read as occluded
            let segments = ctx.link_segments(&decl.child);
            let reps: Vec<_> = partition
                .representatives(&cloud)
                .map(|p| {
                    segments
                        .iter()
                        .map(|s| snap_to_surface(&s.mesh, &p))
                        .min_by(|a, b| (a - p).norm_squared().total_cmp(&(b - p).norm_squared()))
                        .unwrap_or(p)
                })
                .collect();
            set.merge_capped(&reps, &view, CandidateSource::Superpoints);
            if set.visible().next().is_none() {
                return Err(Error::PromptDegenerate(format!("no visible candidate for {}", decl.child)));
            }
            (annotate_labels(&view, &set), Some(set))
        }
        PromptVariant::Arrows => (annotate_arrows(&view, part, area.plane()?)?, None),
    };
    let image = format!("{}_{}.png", decl.name, variant.stem());
    Ok(PreparedPrompt {
        artifact: PromptArtifact {
            key,
            joint: decl.name.clone(),
            variant,
            manifest: annotated.manifest(&image),
            image,
            candidates,
        },
        png: annotated.png_bytes()?,
        reused: false,
    })
}
