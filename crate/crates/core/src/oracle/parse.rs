use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::joints::JointType;
use crate::viewprompt::ArrowColor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing ```{0} block")]
    MissingFence(&'static str),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("unknown joint type {0:?}")]
    UnknownJointType(String),
    #[error("joint {0}: joint limit must be two numbers for prismatic and revolute joints")]
    MissingLimit(String),
    #[error("joint {joint}: link {link:?} is not listed under links")]
    UnknownLink { joint: String, link: String },
    #[error("expected {expected} selected id(s), got {got}")]
    Cardinality { expected: &'static str, got: usize },
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error("`{field}` value {value:?} is not one of the allowed answers")]
    OutOfDomain { field: &'static str, value: String },
    #[error("malformed line {0:?}")]
    Malformed(String),
}

type Result<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartEntry {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDecl {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    pub limit: Option<[f64; 2]>,
}

/// The contents of an ```articulation tree block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDecl {
    pub parts: Vec<PartEntry>,
    pub links: Vec<String>,
    pub joints: Vec<JointDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HingeTopology {
    BothOnSurface,
    OneInside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HingeExpectation {
    AtLeastTwo,
    ExactlyOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrismaticClass {
    InOut,
    Surface,
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_lowercase()
}

/// Body of the first block opened by ```` ```name ````. Case and inner whitespace of the
/// fence name are ignored; a missing closing fence takes the rest of the reply.
pub fn fenced_block<'a>(reply: &'a str, fence: &'static str) -> Result<&'a str> {
    let want = normalize_ws(fence);
    let mut offset = 0;
    for line in reply.split_inclusive('\n') {
        offset += line.len();
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix("```") {
            if normalize_ws(name) == want {
                let body = &reply[offset.min(reply.len())..];
                let end = body.find("```").unwrap_or(body.len());
                return Ok(&body[..end]);
            }
        }
    }
    Err(ParseError::MissingFence(fence))
}

/// Value after `key:` on the first line whose key matches case-insensitively.
fn field<'a>(block: &'a str, key: &'static str) -> Result<&'a str> {
    let want = normalize_ws(key);
    for line in block.lines() {
        if let Some((k, v)) = line.split_once(':') {
            if normalize_ws(k) == want {
                return Ok(v.trim());
            }
        }
    }
    Err(ParseError::MissingField(key))
}

/// Strips a leading `(n)` enumerator.
fn strip_enumerator(line: &str) -> Option<&str> {
    let rest = line.trim().strip_prefix('(')?;
    let close = rest.find(')')?;
    rest[..close].trim().parse::<u32>().ok()?;
    Some(rest[close + 1..].trim())
}

/// `key: value; key: value;` pairs, keys lowercased with inner whitespace collapsed.
fn key_values(body: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for item in split_items(body) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item
            .split_once(':')
            .ok_or_else(|| ParseError::Malformed(body.trim().to_string()))?;
        out.push((normalize_ws(k), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits on `;` outside square brackets.
fn split_items(body: &str) -> Vec<&str> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    for (i, c) in body.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ';' if depth <= 0 => {
                items.push(&body[last..i]);
                last = i + 1;
            }
            _ => {}
        }
    }
    items.push(&body[last..]);
    items
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub fn parse_part_list(reply: &str) -> Result<Vec<PartEntry>> {
    let block = fenced_block(reply, "part_list")?;
    let mut parts = Vec::new();
    for line in block.lines() {
        let Some(body) = strip_enumerator(line) else {
            continue;
        };
        let kv = key_values(body)?;
        let name = lookup(&kv, "part_name").ok_or(ParseError::MissingField("part_name"))?;
        parts.push(PartEntry {
            name: name.to_string(),
            description: lookup(&kv, "description").unwrap_or_default().to_string(),
        });
    }
    if parts.is_empty() {
        return Err(ParseError::MissingField("part_name"));
    }
    Ok(parts)
}

fn parse_limit(joint: &str, raw: Option<&str>) -> Result<Option<[f64; 2]>> {
    let Some(raw) = raw else {
        return Ok(None);
    };
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("none") || raw.is_empty() {
        return Ok(None);
    }
    let inner = raw
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| ParseError::MissingLimit(joint.to_string()))?;
    let nums: Vec<f64> = inner
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| ParseError::MissingLimit(joint.to_string()))?;
    match nums.as_slice() {
        [a, b] if a.is_finite() && b.is_finite() => Ok(Some([*a, *b])),
        _ => Err(ParseError::MissingLimit(joint.to_string())),
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Parts,
    Links,
    Joints,
}

pub fn parse_articulation_tree(reply: &str) -> Result<TreeDecl> {
    let block = fenced_block(reply, "articulation tree")?;
    let mut section = Section::None;
    let mut tree = TreeDecl {
        parts: Vec::new(),
        links: Vec::new(),
        joints: Vec::new(),
    };
    for line in block.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match normalize_ws(t).replace(" :", ":").as_str() {
            "parts:" => {
                section = Section::Parts;
                continue;
            }
            "links:" => {
                section = Section::Links;
                continue;
            }
            "joints:" => {
                section = Section::Joints;
                continue;
            }
            _ => {}
        }
        let Some(body) = strip_enumerator(t) else {
            if t == "..." {
                continue;
            }
            return Err(ParseError::Malformed(t.to_string()));
        };
        let kv = key_values(body)?;
        match section {
            Section::Parts => tree.parts.push(PartEntry {
                name: lookup(&kv, "part_name").ok_or(ParseError::MissingField("part_name"))?.to_string(),
                description: lookup(&kv, "description").unwrap_or_default().to_string(),
            }),
            Section::Links => tree
                .links
                .push(lookup(&kv, "link_name").ok_or(ParseError::MissingField("link_name"))?.to_string()),
            Section::Joints => {
                let name = lookup(&kv, "joint_name").ok_or(ParseError::MissingField("joint_name"))?.to_string();
                let raw_type = lookup(&kv, "joint_type").ok_or(ParseError::MissingField("joint_type"))?;
                let joint_type =
                    JointType::parse(raw_type).ok_or_else(|| ParseError::UnknownJointType(raw_type.to_string()))?;
                let parent = lookup(&kv, "parent_link").ok_or(ParseError::MissingField("parent_link"))?.to_string();
                let child = lookup(&kv, "child_link").ok_or(ParseError::MissingField("child_link"))?.to_string();
                let limit = parse_limit(&name, lookup(&kv, "joint_limit"))?;
                if joint_type.requires_limits() && limit.is_none() {
                    return Err(ParseError::MissingLimit(name));
                }
                tree.joints.push(JointDecl {
                    name,
                    joint_type,
                    parent,
                    child,
                    limit,
                });
            }
            Section::None => return Err(ParseError::Malformed(t.to_string())),
        }
    }
    for j in &tree.joints {
        for l in [&j.parent, &j.child] {
            if !tree.links.contains(l) {
                return Err(ParseError::UnknownLink {
                    joint: j.name.clone(),
                    link: l.clone(),
                });
            }
        }
    }
    if tree.links.is_empty() {
        return Err(ParseError::MissingField("link_name"));
    }
    Ok(tree)
}

pub fn parse_hinge_topology(reply: &str) -> Result<HingeTopology> {
    let block = fenced_block(reply, "hinge_info")?;
    let choice = field(block, "choice")?;
    let digits: Vec<char> = choice.chars().filter(|c| c.is_ascii_digit()).collect();
    let stripped: String = choice.chars().filter(|c| !c.is_whitespace()).collect();
    let ok_shape = stripped.len() == 1 || (stripped.starts_with('(') && stripped.ends_with(')') && stripped.len() == 3);
    match (digits.as_slice(), ok_shape) {
        (['1'], true) => Ok(HingeTopology::BothOnSurface),
        (['2'], true) => Ok(HingeTopology::OneInside),
        _ => Err(ParseError::OutOfDomain {
            field: "choice",
            value: choice.to_string(),
        }),
    }
}

pub fn parse_hinge_points(reply: &str, expected: HingeExpectation) -> Result<Vec<u32>> {
    let block = fenced_block(reply, "hinge points")?;
    let raw = field(block, "selected ids")?;
    let ids = raw
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|_| ParseError::InvalidId(s.to_string())))
        .collect::<Result<Vec<_>>>()?;
    match expected {
        HingeExpectation::AtLeastTwo if ids.len() < 2 => Err(ParseError::Cardinality {
            expected: "two or more",
            got: ids.len(),
        }),
        HingeExpectation::ExactlyOne if ids.len() != 1 => Err(ParseError::Cardinality {
            expected: "exactly one",
            got: ids.len(),
        }),
        _ => Ok(ids),
    }
}

pub fn parse_prismatic_class(reply: &str) -> Result<PrismaticClass> {
    let block = fenced_block(reply, "translation_axis_info")?;
    let choice = field(block, "choice")?;
    let c = normalize_ws(choice);
    let c = c.trim_end_matches('.');
    match c {
        "outward/inward" | "outward" | "inward" | "outwards" | "inwards" | "inward/outward" | "outward / inward" => {
            Ok(PrismaticClass::InOut)
        }
        "surface" => Ok(PrismaticClass::Surface),
        _ => Err(ParseError::OutOfDomain {
            field: "choice",
            value: choice.to_string(),
        }),
    }
}

pub fn parse_arrow(reply: &str) -> Result<ArrowColor> {
    let block = fenced_block(reply, "sliding direction")?;
    let raw = field(block, "selected arrow")?;
    let words: Vec<&str> = raw
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter(|w| !w.is_empty() && !w.eq_ignore_ascii_case("arrow"))
        .collect();
    match words.as_slice() {
        [w] => ArrowColor::parse(w).ok_or_else(|| ParseError::OutOfDomain {
            field: "selected arrow",
            value: raw.to_string(),
        }),
        _ => Err(ParseError::OutOfDomain {
            field: "selected arrow",
            value: raw.to_string(),
        }),
    }
}
