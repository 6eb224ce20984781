//! End-to-end runs: configuration, per-joint estimation, limit validation and the
//! artifacts behind each command-line subcommand.

mod config;
mod prompts;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

pub use config::{
    BackendChoice, GeometryConfig, InputConfig, JointHints, OracleConfig, Overrides, PrismaticHint, RefineConfig,
    RunConfig, RunSection,
};
pub use prompts::{object_digest, prepare_prompt, PreparedPrompt, PromptArtifact, PromptVariant};

use crate::asset_io::{export_urdf, load_segmented_mesh_with, ExportManifest, PartSegment, SegmentedObject};
use crate::error::{Error, Result};
use crate::eval::{evaluate_files, EvalReport, JointRecord, RecordFile};
use crate::fixtures::{write_corpus, FixtureTruth};
use crate::geometry::{centroid, connecting_area, ConnectingArea, Line};
use crate::joints::{
    intersect_limits, orient_revolute_axis, solve_prismatic_inout, solve_prismatic_surface, solve_revolute_single_point,
    solve_revolute_two_point, spans_full_turn, validate_revolute_limits, JointReport, JointSpec, JointType, Provenance,
    Solver, SweepSettings,
};
use crate::kinematics::{refinement_loop, write_trace_jsonl, ArticulationTree, SdfPull, SphereTarget};
use crate::oracle::{
    build_prompt, parse_articulation_tree, Backend, HingeTopology, JointDecl, Oracle, OracleTranscript, Parsed,
    PrismaticClass, PromptContext, Purpose, RemoteClient, ReplayStore, TranscriptStore, TreeDecl,
};

/// Loaded inputs shared by the stages of one run.
pub struct RunContext {
    pub config: RunConfig,
    pub object: SegmentedObject,
    pub digest: String,
    pub decl: TreeDecl,
    pub layout: TreeLayout,
}

/// Root link and the parts merged into each link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeLayout {
    pub root: String,
    pub links: Vec<(String, Vec<String>)>,
}

/// What a finished run wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub joints: Vec<JointReport>,
    pub urdf: ExportManifest,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.joints.iter().filter(|j| j.error.is_some()).count()
    }
}

/// Final joint specs next to the layout, enough to rebuild the tree without re-estimating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedTree {
    pub layout: TreeLayout,
    pub declared: TreeDecl,
    pub joints: Vec<JointSpec>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Parts of each declared link: explicit config entries first, then the part sharing the
/// link's name (case-insensitive). Parts left over join the root link.
pub fn link_layout(decl: &TreeDecl, object: &SegmentedObject, explicit: &std::collections::BTreeMap<String, Vec<String>>) -> Result<TreeLayout> {
    let roots: Vec<&String> = decl
        .links
        .iter()
        .filter(|l| !decl.joints.iter().any(|j| &j.child == *l))
        .collect();
    let root = match roots.as_slice() {
        [r] => (*r).clone(),
        _ => return Err(Error::InvalidTree(format!("expected one root link, found {roots:?}"))),
    };
    let mut links: Vec<(String, Vec<String>)> = decl
        .links
        .iter()
        .map(|l| {
            let parts = match explicit.get(l) {
                Some(p) => p.clone(),
                None => object
                    .parts
                    .iter()
                    .filter(|p| p.name.eq_ignore_ascii_case(l))
                    .map(|p| p.name.clone())
                    .collect(),
            };
            (l.clone(), parts)
        })
        .collect();
    let leftover: Vec<String> = object
        .parts
        .iter()
        .filter(|p| !links.iter().any(|(_, ps)| ps.contains(&p.name)))
        .map(|p| p.name.clone())
        .collect();
    if let Some((_, parts)) = links.iter_mut().find(|(l, _)| *l == root) {
        parts.extend(leftover);
    }
    Ok(TreeLayout { root, links })
}

pub fn load_object(config: &RunConfig) -> Result<SegmentedObject> {
    let mesh = config.input.mesh.as_ref().ok_or_else(|| Error::Config("input.mesh is required".into()))?;
    let labels = config.input.labels.as_ref().ok_or_else(|| Error::Config("input.labels is required".into()))?;
    load_segmented_mesh_with(mesh, labels, &config.sampling)
}

fn transcript_ids(t: &OracleTranscript) -> impl Iterator<Item = String> + '_ {
    t.previous.iter().cloned().chain(std::iter::once(t.request_hash.clone()))
}

impl RunContext {
    /// Loads the object and settles the tree: from `input.tree`, or by asking `oracle`.
    pub fn load(config: RunConfig, oracle: Option<&Oracle>) -> Result<Self> {
        let object = load_object(&config)?;
        RunContext::new(config, object, oracle)
    }

    pub fn new(config: RunConfig, object: SegmentedObject, oracle: Option<&Oracle>) -> Result<Self> {
        let decl = match (&config.input.tree, oracle) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_articulation_tree(&text)?
            }
            (None, Some(oracle)) => {
                let ctx = PromptContext {
                    object_name: Some(config.input.object_name.clone()),
                    recognized_parts: object.parts.iter().map(|p| p.name.clone()).collect(),
                    ..Default::default()
                };
                let t = oracle.query(&build_prompt(Purpose::ArticulationTree, &ctx)?)?;
                match t.parsed {
                    Some(Parsed::ArticulationTree(d)) => d,
                    _ => return Err(Error::OracleMalformed("no articulation tree in reply".into())),
                }
            }
            (None, None) => return Err(Error::Config("input.tree is required when no oracle is consulted".into())),
        };
        let layout = link_layout(&decl, &object, &config.input.link_parts)?;
        Ok(RunContext {
            digest: object_digest(&object),
            config,
            object,
            decl,
            layout,
        })
    }

    pub fn link_segments(&self, link: &str) -> Vec<&PartSegment> {
        self.layout
            .links
            .iter()
            .find(|(l, _)| l == link)
            .map(|(_, parts)| parts.iter().filter_map(|p| self.object.part(p)).collect())
            .unwrap_or_default()
    }

    pub fn link_points(&self, link: &str) -> Vec<Point3<f64>> {
        self.link_segments(link)
            .iter()
            .flat_map(|p| p.cloud.points.iter().copied())
            .collect()
    }

    /// The link's part with the most samples; used to pick the camera.
    pub fn primary_part(&self, link: &str) -> Result<&PartSegment> {
        self.link_segments(link)
            .into_iter()
            .max_by_key(|p| p.cloud.len())
            .ok_or_else(|| Error::InvalidTree(format!("link {link} has no parts")))
    }

    pub fn connecting_area(&self, decl: &JointDecl) -> Result<ConnectingArea> {
        let parent = self.link_points(&decl.parent);
        let child = self.link_points(&decl.child);
        if child.is_empty() {
            return Err(Error::InvalidTree(format!("link {} has no parts", decl.child)));
        }
        connecting_area(&parent, &child, self.config.geometry.tau0, self.config.geometry.max_doublings)
    }

    fn prompt_context(&self, decl: &JointDecl) -> PromptContext {
        PromptContext::for_part(&self.config.input.object_name, &decl.child)
    }

    fn child_anchor(&self, decl: &JointDecl) -> Point3<f64> {
        let pts = self.link_points(&decl.child);
        if pts.is_empty() {
            Point3::origin()
        } else {
            centroid(&pts)
        }
    }

    /// Estimates one joint's axis and prompt-unit limits from oracle answers.
    pub fn estimate_joint(&self, decl: &JointDecl, oracle: &Oracle) -> Result<JointSpec> {
        let mut provenance = Provenance::new(Solver::None);
        let mut spec = JointSpec {
            name: decl.name.clone(),
            joint_type: decl.joint_type,
            parent: decl.parent.clone(),
            child: decl.child.clone(),
            axis: Line::new(self.child_anchor(decl), Vector3::z()),
            limits: None,
            provenance: Provenance::new(Solver::None),
        };
        if !decl.joint_type.is_actuated() {
            return Ok(spec);
        }
        let area = self.connecting_area(decl)?;
        if area.doublings > 0 {
            provenance.notes.push(format!(
                "connecting area found at threshold {} after {} doublings",
                area.final_threshold, area.doublings
            ));
        }
        let base = self.prompt_context(decl);
        if decl.joint_type.is_rotational() {
            let t = oracle.query(&build_prompt(Purpose::HingeTopology, &base)?)?;
            provenance.transcripts.extend(transcript_ids(&t));
            let topology = match t.parsed {
                Some(Parsed::HingeTopology(h)) => h,
                _ => return Err(Error::OracleMalformed("no hinge topology in reply".into())),
            };
            let variant = match topology {
                HingeTopology::BothOnSurface => PromptVariant::HingeBoth,
                HingeTopology::OneInside => PromptVariant::HingeSingle,
            };
            let prepared = prepare_prompt(self, decl, variant, &area)?;
            prepared.save(&self.config.run.out_dir.join("prompts"))?;
            let set = prepared.artifact.candidates.clone().unwrap_or_else(|| unreachable!("hinge prompts carry candidates"));
            let ctx = PromptContext {
                hinge: variant.hinge(),
                ..base
            };
            let request = build_prompt(Purpose::HingePoints, &ctx)?.with_image(prepared.image());
            let check = |p: &Parsed| match p {
                Parsed::HingePoints(ids) => match ids.iter().find(|id| !set.get(**id).is_some_and(|c| c.visible)) {
                    Some(id) => Err(format!("{id} is not one of the labeled points")),
                    None => Ok(()),
                },
                _ => Err("expected selected IDs".into()),
            };
            let t = oracle.query_checked(&request, &check)?;
            provenance.transcripts.extend(transcript_ids(&t));
            let ids = match t.parsed {
                Some(Parsed::HingePoints(ids)) => ids,
                _ => return Err(Error::OracleMalformed("no hinge points in reply".into())),
            };
            spec.axis = match topology {
                HingeTopology::BothOnSurface => {
                    provenance.solver = Solver::RevoluteTwoPoint;
                    solve_revolute_two_point(&set, &ids)?
                }
                HingeTopology::OneInside => {
                    provenance.solver = Solver::RevoluteSinglePoint;
                    let point = set.get(ids[0]).ok_or(Error::UnknownCandidate(ids[0]))?.point;
                    solve_revolute_single_point(point, &area)?
                }
            };
            spec.limits = (decl.joint_type == JointType::Revolute).then(|| decl.limit.unwrap_or([0.0, 0.0]));
        } else {
            let t = oracle.query(&build_prompt(Purpose::PrismaticClass, &base)?)?;
            provenance.transcripts.extend(transcript_ids(&t));
            let class = match t.parsed {
                Some(Parsed::PrismaticClass(c)) => c,
                _ => return Err(Error::OracleMalformed("no translation class in reply".into())),
            };
            let direction = match class {
                PrismaticClass::InOut => {
                    provenance.solver = Solver::PrismaticInOut;
                    let parent = self.link_points(&decl.parent);
                    let (dir, tie) = solve_prismatic_inout(&area, &centroid(&parent))?;
                    if tie {
                        provenance.notes.push("parent centroid on the contact plane; sign from dominant axis".into());
                    }
                    dir
                }
                PrismaticClass::Surface => {
                    provenance.solver = Solver::PrismaticSurface;
                    let prepared = prepare_prompt(self, decl, PromptVariant::Arrows, &area)?;
                    prepared.save(&self.config.run.out_dir.join("prompts"))?;
                    let arrows = prepared.artifact.manifest.arrows.clone();
                    let request = build_prompt(Purpose::SlidingArrow, &base)?.with_image(prepared.image());
                    let check = |p: &Parsed| match p {
                        Parsed::SlidingArrow(c) if arrows.iter().any(|a| a.color == *c) => Ok(()),
                        Parsed::SlidingArrow(c) => Err(format!("there is no {c} arrow")),
                        _ => Err("expected an arrow color".into()),
                    };
                    let t = oracle.query_checked(&request, &check)?;
                    provenance.transcripts.extend(transcript_ids(&t));
                    let color = match t.parsed {
                        Some(Parsed::SlidingArrow(c)) => c,
                        _ => return Err(Error::OracleMalformed("no arrow in reply".into())),
                    };
                    let arrow = arrows.iter().find(|a| a.color == color).ok_or(Error::ArrowParallel)?;
                    solve_prismatic_surface(&arrow.direction, &area)?
                }
            };
            spec.axis = Line::new(self.child_anchor(decl), direction);
            spec.limits = Some(decl.limit.unwrap_or([0.0, 0.0]));
        }
        spec.provenance = provenance;
        Ok(spec)
    }

    fn tree_from_specs(&self, joints: Vec<JointSpec>) -> Result<ArticulationTree> {
        ArticulationTree::from_object(&self.object, &self.layout.root, &self.layout.links, joints)
    }
}

/// The oracle for a run; transcripts go to `<out>/transcripts`.
pub fn build_oracle(config: &RunConfig, object: Option<&SegmentedObject>) -> Result<Oracle> {
    let backend = match config.oracle.backend {
        BackendChoice::Remote => Backend::Remote(RemoteClient::from_env(config.oracle.remote.clone())?),
        BackendChoice::Replay => {
            let dir = config
                .oracle
                .transcripts
                .as_ref()
                .ok_or_else(|| Error::Config("the replay oracle needs oracle.transcripts".into()))?;
            Backend::Replay(ReplayStore::open(dir)?)
        }
        BackendChoice::Mock => {
            let path = config
                .input
                .truth
                .as_ref()
                .ok_or_else(|| Error::Config("the mock oracle needs input.truth".into()))?;
            let object = object.ok_or_else(|| Error::Config("the mock oracle needs the loaded object".into()))?;
            Backend::Mock(FixtureTruth::read(path)?.mock_oracle(&object.normalization))
        }
    };
    let store = TranscriptStore::create(&config.run.out_dir.join("transcripts"))?;
    Ok(Oracle::new(backend, Some(store)))
}

fn failed_spec(ctx: &RunContext, decl: &JointDecl) -> JointSpec {
    JointSpec {
        name: decl.name.clone(),
        joint_type: JointType::Fixed,
        parent: decl.parent.clone(),
        child: decl.child.clone(),
        axis: Line::new(ctx.child_anchor(decl), Vector3::z()),
        limits: None,
        provenance: Provenance::new(Solver::None),
    }
}

/// Runs `f` over `items` on up to `limit` threads; results keep the input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], limit: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new(items.iter().map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..limit.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

/// Full pipeline: tree, per-joint estimation, limit validation, URDF export. Joint failures
/// are recorded in the report and exported as fixed joints; the run still completes.
pub fn cmd_articulate(config: &RunConfig) -> Result<RunSummary> {
    let out = config.run.out_dir.clone();
    create_dir(&out)?;
    // the remote credential is checked before any geometry work
    let remote = match config.oracle.backend {
        BackendChoice::Remote => Some(build_oracle(config, None)?),
        _ => None,
    };
    let object = load_object(config)?;
    let oracle = match remote {
        Some(o) => o,
        None => build_oracle(config, Some(&object))?,
    };
    let ctx = RunContext::new(config.clone(), object, Some(&oracle))?;
    let estimates = parallel_map(&ctx.decl.joints, config.run.concurrency, |d| ctx.estimate_joint(d, &oracle));

    let mut specs = Vec::new();
    let mut errors = Vec::new();
    for (decl, est) in ctx.decl.joints.iter().zip(estimates) {
        match est {
            Ok(spec) => {
                specs.push(spec);
                errors.push(None);
            }
            Err(e) => {
                log::error!("joint {}: {e}", decl.name);
                specs.push(failed_spec(&ctx, decl));
                errors.push(Some(e.to_string()));
            }
        }
    }
    let mut tree = ctx.tree_from_specs(specs)?;
    let mut sweeps = vec![None; tree.joints.len()];
    // sampling noise scatters contact points into the neighbor; widen the contact tolerance to match
    let sweep_settings = SweepSettings {
        eps: config.sweep.eps.max(3.0 * config.sampling.noise_sigma),
        ..config.sweep
    };
    for j in 0..tree.joints.len() {
        if tree.joints[j].joint_type != JointType::Revolute || errors[j].is_some() {
            continue;
        }
        if orient_revolute_axis(&ctx.object, &mut tree, j, config.sweep.step) {
            tree.joints[j].provenance.notes.push("axis flipped so positive angles open".into());
        }
        match validate_revolute_limits(&ctx.object, &tree, j, &sweep_settings) {
            Ok(report) => {
                let joint = &mut tree.joints[j];
                if report.rest_violation {
                    joint.provenance.notes.push("rest pose penetrates; limits collapsed".into());
                }
                // declared stops the geometry cannot show still bound the joint
                if spans_full_turn(report.limits) && joint.limits.map_or(true, spans_full_turn) {
                    joint.joint_type = JointType::Continuous;
                    joint.limits = None;
                    joint.provenance.notes.push("sweep is collision-free all round; promoted to continuous".into());
                } else {
                    let declared = joint.limits.unwrap_or(report.limits);
                    joint.limits = Some(intersect_limits(report.limits, declared));
                }
                sweeps[j] = Some(report);
            }
            Err(e) => errors[j] = Some(e.to_string()),
        }
    }
    for j in 0..tree.joints.len() {
        if errors[j].is_some() && tree.joints[j].joint_type != JointType::Fixed {
            let decl = &ctx.decl.joints[j];
            tree.joints[j] = failed_spec(&ctx, decl);
        }
    }
    let reports: Vec<JointReport> = tree
        .joints
        .iter()
        .zip(&ctx.decl.joints)
        .zip(sweeps.into_iter().zip(errors))
        .map(|((spec, decl), (sweep, error))| {
            let mut r = JointReport::from_spec(spec, sweep);
            if error.is_some() {
                // report the declared type of a joint that was exported as fixed
                r.joint_type = decl.joint_type;
                r.error = error;
            }
            r
        })
        .collect();

    write_json(&out.join("joints.json"), &reports)?;
    write_json(
        &out.join("tree.json"),
        &SavedTree {
            layout: ctx.layout.clone(),
            declared: ctx.decl.clone(),
            joints: tree.joints.clone(),
        },
    )?;
    write_json(&out.join("predictions.json"), &predictions(&tree, &reports, &ctx.object))?;
    let urdf = export_urdf(&tree, &ctx.object.normalization, &out.join("urdf"))?;
    Ok(RunSummary {
        out_dir: out,
        joints: reports,
        urdf,
    })
}

/// Normalized axis records of the successfully estimated actuated joints.
pub fn predictions(tree: &ArticulationTree, reports: &[JointReport], object: &SegmentedObject) -> RecordFile {
    RecordFile {
        normalization_scale: Some(object.normalization.scale),
        joints: tree
            .joints
            .iter()
            .zip(reports)
            .filter(|(j, r)| r.error.is_none() && j.joint_type.is_actuated())
            .map(|(j, _)| JointRecord::from_line(&j.name, j.joint_type, &j.axis))
            .collect(),
    }
}

fn hinted_variant(config: &RunConfig, decl: &JointDecl) -> Option<PromptVariant> {
    let hints = config.joints.get(&decl.name).copied().unwrap_or_default();
    match decl.joint_type {
        JointType::Revolute | JointType::Continuous => {
            let default = if decl.joint_type == JointType::Continuous {
                HingeTopology::OneInside
            } else {
                HingeTopology::BothOnSurface
            };
            Some(match hints.topology.unwrap_or(default) {
                HingeTopology::BothOnSurface => PromptVariant::HingeBoth,
                HingeTopology::OneInside => PromptVariant::HingeSingle,
            })
        }
        JointType::Prismatic => match hints.prismatic.map(PrismaticClass::from).unwrap_or(PrismaticClass::Surface) {
            PrismaticClass::Surface => Some(PromptVariant::Arrows),
            PrismaticClass::InOut => None,
        },
        _ => None,
    }
}

/// Renders and saves the annotated prompt images without contacting an oracle. Which image a
/// joint gets follows the `[joints.<name>]` hints; revolute joints default to the two-point
/// variant, continuous ones to the single-point variant and prismatic ones to arrows.
pub fn cmd_prompts(config: &RunConfig, joint: Option<&str>) -> Result<Vec<PathBuf>> {
    let ctx = RunContext::load(config.clone(), None)?;
    if let Some(name) = joint {
        if !ctx.decl.joints.iter().any(|j| j.name == name) {
            return Err(Error::Config(format!("no joint named {name}")));
        }
    }
    let dir = config.run.out_dir.join("prompts");
    let mut written = Vec::new();
    for decl in ctx.decl.joints.iter().filter(|j| joint.map_or(true, |n| n == j.name)) {
        let Some(variant) = hinted_variant(config, decl) else {
            log::info!("joint {}: no image prompt", decl.name);
            continue;
        };
        let area = ctx.connecting_area(decl)?;
        written.push(prepare_prompt(&ctx, decl, variant, &area)?.save(&dir)?);
    }
    Ok(written)
}

/// Scores a prediction file against ground truth; writes `report.json` when `out` is given.
pub fn cmd_eval(pred: &Path, gt: &Path, out: Option<&Path>) -> Result<EvalReport> {
    let report = evaluate_files(pred, gt)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("report.json"), &report)?;
        let table = dir.join("report.txt");
        std::fs::write(&table, report.table()).map_err(|e| Error::io(&table, e))?;
    }
    Ok(report)
}

pub fn cmd_fixtures(out_dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    write_corpus(out_dir, seed)
}

/// Loads the object and the tree saved by an earlier articulate run.
pub fn load_run(config: &RunConfig) -> Result<(SegmentedObject, ArticulationTree)> {
    let object = load_object(config)?;
    let saved: SavedTree = read_json(&config.run.out_dir.join("tree.json"))?;
    let tree = ArticulationTree::from_object(&object, &saved.layout.root, &saved.layout.links, saved.joints)?;
    Ok((object, tree))
}

/// Re-exports the URDF of an earlier run into `<out>/urdf`.
pub fn cmd_export_urdf(config: &RunConfig) -> Result<ExportManifest> {
    let (object, tree) = load_run(config)?;
    export_urdf(&tree, &object.normalization, &config.run.out_dir.join("urdf"))
}

/// Default refinement targets: a sphere around each part of every non-root link.
pub fn default_targets(object: &SegmentedObject, tree: &ArticulationTree) -> Vec<SphereTarget> {
    object
        .parts
        .iter()
        .filter(|p| tree.links[tree.link_of_part(&p.name)].name != tree.root)
        .map(|p| {
            let center = centroid(&p.cloud.points);
            let radius = p.mesh.vertices.iter().map(|v| (v - center).norm()).sum::<f64>() / p.mesh.vertices.len().max(1) as f64;
            SphereTarget {
                part: p.name.clone(),
                center,
                radius,
            }
        })
        .collect()
}

/// Runs the randomized-pose refinement on an earlier run's tree and writes
/// `<out>/refine/{trace.jsonl, mesh.obj, labels.txt}`. Returns the final objective.
pub fn cmd_refine(config: &RunConfig) -> Result<Option<f64>> {
    let (object, tree) = load_run(config)?;
    let r = &config.refine;
    let targets = if r.targets.is_empty() {
        default_targets(&object, &tree)
    } else {
        r.targets.clone()
    };
    let mut guidance = SdfPull {
        targets,
        rate: r.rate,
        penetration_weight: r.penetration_weight,
    };
    let dir = config.run.out_dir.join("refine");
    create_dir(&dir)?;
    match refinement_loop(&object, &tree, &mut guidance, r.iterations, config.run.seed, &config.render) {
        Ok(done) => {
            write_trace_jsonl(&done.trace, &dir.join("trace.jsonl"))?;
            done.object.write_obj_with_labels(&dir.join("mesh.obj"), &dir.join("labels.txt"))?;
            Ok(done.trace.last().map(|s| s.objective))
        }
        Err(failure) => {
            write_trace_jsonl(&failure.trace, &dir.join("trace.jsonl"))?;
            Err(failure.error)
        }
    }
}
