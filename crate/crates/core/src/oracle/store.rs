use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{OracleTranscript, PromptRequest};
use crate::error::{Error, Result};

/// Writes one `<request hash>.json` per exchange; writes are serialized.
#[derive(Debug)]
pub struct TranscriptStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl TranscriptStore {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(TranscriptStore {
            dir: dir.to_path_buf(),
            lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, t: &OracleTranscript) -> Result<()> {
        let _guard = self.lock.lock().expect("transcript lock");
        let path = self.dir.join(format!("{}.json", t.request_hash));
        std::fs::write(&path, serde_json::to_string_pretty(t)?).map_err(|e| Error::io(&path, e))
    }
}

pub fn read_transcripts(dir: &Path) -> Result<Vec<OracleTranscript>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect()
}

/// Stored replies keyed by request hash.
#[derive(Debug, Default)]
pub struct ReplayStore {
    replies: HashMap<String, String>,
}

impl ReplayStore {
    pub fn open(dir: &Path) -> Result<Self> {
        let replies = read_transcripts(dir)?
            .into_iter()
            .filter(|t| !t.raw_reply.is_empty())
            .map(|t| (t.request_hash, t.raw_reply))
            .collect();
        Ok(ReplayStore { replies })
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }

    pub fn lookup(&self, request: &PromptRequest) -> Result<String> {
        let hash = request.content_hash();
        self.replies.get(&hash).cloned().ok_or(Error::ReplayMiss(hash))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_prompt, Backend, MockOracle, Oracle, PromptContext, Purpose};

    #[test]
    fn replay_returns_the_recorded_answer() {
        let dir = tempfile::tempdir().unwrap();
        let req = build_prompt(Purpose::PrismaticClass, &PromptContext::for_part("cabinet", "drawer")).unwrap();
        let live = Oracle::new(
            Backend::Mock(MockOracle::scripted(vec![
                "```translation_axis_info\ndescription: pulls out\nchoice: outward/inward\n```".into(),
            ])),
            Some(TranscriptStore::create(dir.path()).unwrap()),
        );
        let first = live.query(&req).unwrap();

        let replay = Oracle::new(Backend::Replay(ReplayStore::open(dir.path()).unwrap()), None);
        let second = replay.query(&req).unwrap();
        assert_eq!(first.parsed, second.parsed);
        for t in read_transcripts(dir.path()).unwrap() {
            assert_eq!(t.reparse().ok(), t.parsed);
        }

        let other = build_prompt(Purpose::PrismaticClass, &PromptContext::for_part("cabinet", "door")).unwrap();
        assert!(matches!(replay.query(&other), Err(Error::ReplayMiss(_))));
    }
}
