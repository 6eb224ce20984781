//! Prompt construction, reply grammars, and the remote / mock / replay oracle backends.

mod mock;
mod parse;
mod remote;
mod store;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use mock::{format_tree_block, MockJoint, MockOracle};
pub use parse::{
    fenced_block, parse_arrow, parse_articulation_tree, parse_hinge_points, parse_hinge_topology, parse_part_list,
    parse_prismatic_class, HingeExpectation, HingeTopology, JointDecl, ParseError, PartEntry, PrismaticClass, TreeDecl,
};
pub use remote::{RemoteClient, RemoteConfig};
pub use store::{read_transcripts, ReplayStore, TranscriptStore};

use crate::error::{Error, Result};
use crate::viewprompt::{AnnotatedView, ArrowColor, ImageManifest};

pub const DEFAULT_TEMPERATURE: f64 = 0.0;

const PART_LIST: &str = include_str!("templates/part_list.txt");
const TREE_SYSTEM: &str = include_str!("templates/articulation_tree_system.txt");
const TREE_USER: &str = include_str!("templates/articulation_tree_user.txt");
const HINGE_TOPOLOGY: &str = include_str!("templates/hinge_topology.txt");
const HINGE_POINTS_BOTH: &str = include_str!("templates/hinge_points_both.txt");
const HINGE_POINTS_SINGLE: &str = include_str!("templates/hinge_points_single.txt");
const PRISMATIC_CLASS: &str = include_str!("templates/prismatic_class.txt");
const SLIDING_ARROW: &str = include_str!("templates/sliding_arrow.txt");

/// Text sent after a reply that failed to parse or named unknown candidates.
pub const REPROMPT_PREFIX: &str = "Your previous answer did not match the required format";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    PartList,
    ArticulationTree,
    HingeTopology,
    HingePoints,
    PrismaticClass,
    SlidingArrow,
}

impl Purpose {
    pub const ALL: [Purpose; 6] = [
        Purpose::PartList,
        Purpose::ArticulationTree,
        Purpose::HingeTopology,
        Purpose::HingePoints,
        Purpose::PrismaticClass,
        Purpose::SlidingArrow,
    ];
}

/// Values substituted into the templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub object_name: Option<String>,
    pub part_name: Option<String>,
    pub recognized_parts: Vec<String>,
    pub hinge: HingeExpectation,
}

impl Default for PromptContext {
    fn default() -> Self {
        PromptContext {
            object_name: None,
            part_name: None,
            recognized_parts: Vec::new(),
            hinge: HingeExpectation::AtLeastTwo,
        }
    }
}

impl PromptContext {
    pub fn for_part(object: &str, part: &str) -> Self {
        PromptContext {
            object_name: Some(object.to_string()),
            part_name: Some(part.to_string()),
            ..Default::default()
        }
    }
}

/// An attached prompt image. Only the digest and manifest are serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptImage {
    pub name: String,
    pub sha256: String,
    pub manifest: Option<ImageManifest>,
    #[serde(skip)]
    pub png: Vec<u8>,
}

impl PromptImage {
    pub fn from_png(name: &str, png: Vec<u8>, manifest: Option<ImageManifest>) -> Self {
        PromptImage {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(&png)),
            manifest,
            png,
        }
    }

    pub fn from_view(name: &str, view: &AnnotatedView) -> Result<Self> {
        Ok(PromptImage::from_png(name, view.png_bytes()?, Some(view.manifest(name))))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub purpose: Purpose,
    pub system_text: String,
    pub user_text: String,
    pub images: Vec<PromptImage>,
    pub temperature: f64,
    pub context: PromptContext,
    /// Earlier assistant replies and corrections, oldest first.
    #[serde(default)]
    pub history: Vec<Message>,
}

impl PromptRequest {
    pub fn with_image(mut self, image: PromptImage) -> Self {
        self.images.push(image);
        self
    }

    /// Hex SHA-256 of the serialized request (image bytes enter through their digests).
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// The request extended by a failed reply and a correction message.
    pub fn reprompted(&self, reply: &str, problem: &str) -> PromptRequest {
        let mut next = self.clone();
        next.history.push(Message {
            role: "assistant".into(),
            text: reply.to_string(),
        });
        next.history.push(Message {
            role: "user".into(),
            text: format!("{REPROMPT_PREFIX}: {problem}. Please answer again using exactly the required format."),
        });
        next
    }
}

fn need<'a>(value: &'a Option<String>, placeholder: &'static str) -> Result<&'a str> {
    match value.as_deref() {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::MissingPlaceholder(placeholder)),
    }
}

fn object_part_text(ctx: &PromptContext) -> Result<String> {
    Ok(format!(
        "Object: {}\nPart: {}",
        need(&ctx.object_name, "{object_name}")?,
        need(&ctx.part_name, "{part_name}")?
    ))
}

/// Fills the template for `purpose`. Templates with object/part placeholders become the
/// user message; the fixed ones go to the system message.
pub fn build_prompt(purpose: Purpose, ctx: &PromptContext) -> Result<PromptRequest> {
    let (system_text, user_text) = match purpose {
        Purpose::PartList => (PART_LIST.to_string(), String::new()),
        Purpose::ArticulationTree => {
            let object = need(&ctx.object_name, "OBJECT_NAME")?;
            if ctx.recognized_parts.is_empty() {
                return Err(Error::MissingPlaceholder("RECOGNIZED_PARTS"));
            }
            let user = TREE_USER
                .replace("OBJECT_NAME", object)
                .replace("RECOGNIZED_PARTS", &ctx.recognized_parts.join(", "));
            (TREE_SYSTEM.to_string(), user)
        }
        Purpose::HingeTopology => (HINGE_TOPOLOGY.to_string(), object_part_text(ctx)?),
        Purpose::PrismaticClass => (PRISMATIC_CLASS.to_string(), object_part_text(ctx)?),
        Purpose::HingePoints | Purpose::SlidingArrow => {
            let object = need(&ctx.object_name, "{object_name}")?;
            let part = need(&ctx.part_name, "{part_name}")?;
            let template = match (purpose, ctx.hinge) {
                (Purpose::SlidingArrow, _) => SLIDING_ARROW,
                (_, HingeExpectation::AtLeastTwo) => HINGE_POINTS_BOTH,
                (_, HingeExpectation::ExactlyOne) => HINGE_POINTS_SINGLE,
            };
            (
                String::new(),
                template.replace("{object_name}", object).replace("{part_name}", part),
            )
        }
    };
    Ok(PromptRequest {
        purpose,
        system_text,
        user_text,
        images: Vec::new(),
        temperature: DEFAULT_TEMPERATURE,
        context: ctx.clone(),
        history: Vec::new(),
    })
}

/// Typed reply, one variant per purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Parsed {
    PartList(Vec<PartEntry>),
    ArticulationTree(TreeDecl),
    HingeTopology(HingeTopology),
    HingePoints(Vec<u32>),
    PrismaticClass(PrismaticClass),
    SlidingArrow(ArrowColor),
}

pub fn parse_reply(purpose: Purpose, hinge: HingeExpectation, reply: &str) -> Result<Parsed, ParseError> {
    Ok(match purpose {
        Purpose::PartList => Parsed::PartList(parse_part_list(reply)?),
        Purpose::ArticulationTree => Parsed::ArticulationTree(parse_articulation_tree(reply)?),
        Purpose::HingeTopology => Parsed::HingeTopology(parse_hinge_topology(reply)?),
        Purpose::HingePoints => Parsed::HingePoints(parse_hinge_points(reply, hinge)?),
        Purpose::PrismaticClass => Parsed::PrismaticClass(parse_prismatic_class(reply)?),
        Purpose::SlidingArrow => Parsed::SlidingArrow(parse_arrow(reply)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
    Replay,
}

/// One request/reply exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTranscript {
    pub request_hash: String,
    pub request: PromptRequest,
    pub raw_reply: String,
    pub parsed: Option<Parsed>,
    pub error: Option<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub backend: BackendKind,
    /// Hashes of earlier exchanges in the same reprompt chain.
    #[serde(default)]
    pub previous: Vec<String>,
}

impl OracleTranscript {
    /// Re-parses the stored reply; replay safety requires this to equal `parsed`.
    pub fn reparse(&self) -> Result<Parsed, ParseError> {
        parse_reply(self.request.purpose, self.request.context.hinge, &self.raw_reply)
    }
}

pub enum Backend {
    Remote(RemoteClient),
    Mock(MockOracle),
    Replay(ReplayStore),
}

impl Backend {
    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Remote(_) => BackendKind::Remote,
            Backend::Mock(_) => BackendKind::Mock,
            Backend::Replay(_) => BackendKind::Replay,
        }
    }

    pub fn send(&self, request: &PromptRequest) -> Result<String> {
        match self {
            Backend::Remote(r) => r.send(request),
            Backend::Mock(m) => m.answer(request),
            Backend::Replay(r) => r.lookup(request),
        }
    }
}

/// A backend plus an optional transcript directory.
pub struct Oracle {
    pub backend: Backend,
    pub store: Option<TranscriptStore>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl Oracle {
    pub fn new(backend: Backend, store: Option<TranscriptStore>) -> Self {
        Oracle { backend, store }
    }

    fn record(&self, t: &OracleTranscript) -> Result<()> {
        match &self.store {
            Some(s) => s.write(t),
            None => Ok(()),
        }
    }

    pub fn query(&self, request: &PromptRequest) -> Result<OracleTranscript> {
        self.query_checked(request, &|_| Ok(()))
    }

    /// Sends `request`; a reply that fails to parse or fails `check` is answered with one
    /// correction and the request is sent again before giving up.
    pub fn query_checked(
        &self,
        request: &PromptRequest,
        check: &dyn Fn(&Parsed) -> std::result::Result<(), String>,
    ) -> Result<OracleTranscript> {
        let mut current = request.clone();
        let mut previous = Vec::new();
        for attempt in 0..2 {
            let hash = current.content_hash();
            let mut transcript = OracleTranscript {
                request_hash: hash.clone(),
                request: current.clone(),
                raw_reply: String::new(),
                parsed: None,
                error: None,
                timestamp: now(),
                backend: self.backend.kind(),
                previous: previous.clone(),
            };
            let raw = match self.backend.send(&current) {
                Ok(raw) => raw,
                Err(e) => {
                    transcript.error = Some(e.to_string());
                    self.record(&transcript)?;
                    return Err(e);
                }
            };
            transcript.raw_reply = raw.clone();
            let problem = match parse_reply(current.purpose, current.context.hinge, &raw) {
                Ok(parsed) => match check(&parsed) {
                    Ok(()) => {
                        transcript.parsed = Some(parsed);
                        self.record(&transcript)?;
                        return Ok(transcript);
                    }
                    Err(p) => {
                        transcript.parsed = Some(parsed);
                        p
                    }
                },
                Err(e) => e.to_string(),
            };
            transcript.error = Some(problem.clone());
            self.record(&transcript)?;
            if attempt == 1 {
                return Err(Error::OracleMalformed(problem));
            }
            log::warn!("oracle reply rejected ({problem}); reprompting once");
            previous.push(hash);
            current = current.reprompted(&raw, &problem);
        }
        unreachable!("loop returns on the second attempt")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PromptContext {
        PromptContext::for_part("laptop", "lid")
    }

    #[test]
    fn hinge_prompt_mentions_the_part() {
        let r = build_prompt(Purpose::HingePoints, &ctx()).unwrap();
        assert!(r
            .user_text
            .contains("Please select the points that are on the rotation axis of the lid of the laptop"));
        let s = build_prompt(Purpose::SlidingArrow, &ctx()).unwrap();
        assert!(s.user_text.contains("(in red, yellow, blue, green)"));
    }

    #[test]
    fn missing_part_name_is_an_error() {
        let c = PromptContext {
            object_name: Some("laptop".into()),
            ..Default::default()
        };
        assert!(matches!(
            build_prompt(Purpose::HingePoints, &c),
            Err(Error::MissingPlaceholder("{part_name}"))
        ));
        assert!(matches!(
            build_prompt(Purpose::ArticulationTree, &c),
            Err(Error::MissingPlaceholder("RECOGNIZED_PARTS"))
        ));
    }

    #[test]
    fn hash_tracks_content() {
        let a = build_prompt(Purpose::HingePoints, &ctx()).unwrap();
        let b = build_prompt(Purpose::HingePoints, &ctx()).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let c = a.clone().with_image(PromptImage::from_png("x.png", vec![1, 2, 3], None));
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }

    fn scripted(replies: &[&str]) -> Backend {
        Backend::Mock(MockOracle::scripted(replies.iter().map(|s| s.to_string()).collect()))
    }

    #[test]
    fn one_reprompt_then_success() {
        let oracle = Oracle::new(
            scripted(&["no fence here", "```hinge_info\ndescription: x\nchoice: (2)\n```"]),
            None,
        );
        let req = build_prompt(Purpose::HingeTopology, &ctx()).unwrap();
        let t = oracle.query(&req).unwrap();
        assert_eq!(t.parsed, Some(Parsed::HingeTopology(HingeTopology::OneInside)));
        assert_eq!(t.previous.len(), 1);
        assert_eq!(t.request.history.len(), 2);
        assert!(t.request.history[1].text.starts_with(REPROMPT_PREFIX));
    }

    #[test]
    fn two_bad_replies_fail() {
        let oracle = Oracle::new(scripted(&["nope", "still nope"]), None);
        let req = build_prompt(Purpose::HingeTopology, &ctx()).unwrap();
        assert!(matches!(oracle.query(&req), Err(Error::OracleMalformed(_))));
    }

    #[test]
    fn failed_check_reprompts() {
        let oracle = Oracle::new(
            scripted(&[
                "```hinge points\ndescription: d\nselected IDs: 1, 9\n```",
                "```hinge points\ndescription: d\nselected IDs: 1, 2\n```",
            ]),
            None,
        );
        let req = build_prompt(Purpose::HingePoints, &ctx()).unwrap();
        let check = |p: &Parsed| match p {
            Parsed::HingePoints(ids) if ids.iter().all(|&i| i <= 4) => Ok(()),
            _ => Err("unknown id".to_string()),
        };
        let t = oracle.query_checked(&req, &check).unwrap();
        assert_eq!(t.parsed, Some(Parsed::HingePoints(vec![1, 2])));
    }
}
