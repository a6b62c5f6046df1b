//! LLM client abstraction with record/replay support.
//!
//! Every orchestration call goes through [`LlmClient`]. Production runs wrap a
//! live backend in a [`RecordingClient`] so the full exchange lands in a
//! transcript file; CI and tests replay those transcripts through
//! [`ReplayClient`], which is deterministic by construction. The only live
//! backend shipped here is [`CommandClient`], a vendor-neutral adapter that
//! pipes each request to an external program.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CodebookError;

/// Minimal completion interface. Implementations identify their model via
/// [`version`](LlmClient::version) and must be deterministic in replay mode.
pub trait LlmClient {
    fn complete(&self, system_prompt: &str, user_text: &str) -> Result<String, CodebookError>;
    fn version(&self) -> &str;
}

/// One recorded exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    /// Integrity hash over `(system_prompt, user_text)`.
    pub prompt_hash: String,
    pub system_prompt: String,
    pub user_text: String,
    pub reply: String,
}

/// Hash identifying a prompt pair inside a transcript.
pub fn prompt_hash(system_prompt: &str, user_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(system_prompt.as_bytes());
    hasher.update([0x1f]);
    hasher.update(user_text.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Writes records as line-delimited JSON.
pub fn write_transcript(
    path: impl AsRef<Path>,
    records: &[TranscriptRecord],
) -> Result<(), CodebookError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).map_err(|e| {
            CodebookError::TranscriptFormat {
                line: 0,
                message: e.to_string(),
            }
        })?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a line-delimited transcript, re-verifying each record's hash.
pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptRecord>, CodebookError> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptRecord =
            serde_json::from_str(&line).map_err(|e| CodebookError::TranscriptFormat {
                line: idx + 1,
                message: e.to_string(),
            })?;
        let expected = prompt_hash(&record.system_prompt, &record.user_text);
        if record.prompt_hash != expected {
            return Err(CodebookError::TranscriptFormat {
                line: idx + 1,
                message: format!(
                    "prompt hash {} does not match content hash {expected}",
                    record.prompt_hash
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Replays a recorded transcript. Replies for identical prompts are consumed
/// in recorded order, so retry flows replay exactly as they ran.
pub struct ReplayClient {
    queues: Mutex<HashMap<String, VecDeque<String>>>,
    version: String,
}

impl ReplayClient {
    pub fn from_records(records: Vec<TranscriptRecord>) -> Self {
        let mut queues: HashMap<String, VecDeque<String>> = HashMap::new();
        for record in records {
            queues
                .entry(record.prompt_hash)
                .or_default()
                .push_back(record.reply);
        }
        Self {
            queues: Mutex::new(queues),
            version: "replay".to_string(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CodebookError> {
        Ok(Self::from_records(read_transcript(path)?))
    }

    /// Number of replies still queued.
    pub fn remaining(&self) -> usize {
        self.queues
            .lock()
            .expect("replay queue lock")
            .values()
            .map(VecDeque::len)
            .sum()
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, system_prompt: &str, user_text: &str) -> Result<String, CodebookError> {
        let key = prompt_hash(system_prompt, user_text);
        let mut queues = self.queues.lock().expect("replay queue lock");
        queues
            .get_mut(&key)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| CodebookError::NoRecordedReply {
                prompt_hash: key,
                user_text: truncate_for_error(user_text),
            })
    }

    fn version(&self) -> &str {
        &self.version
    }
}

fn truncate_for_error(text: &str) -> String {
    const LIMIT: usize = 80;
    if text.chars().count() <= LIMIT {
        text.to_string()
    } else {
        let head: String = text.chars().take(LIMIT).collect();
        format!("{head}...")
    }
}

/// Wraps a live client and records every exchange.
pub struct RecordingClient<C> {
    inner: C,
    records: Mutex<Vec<TranscriptRecord>>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.records.lock().expect("record lock").clone()
    }

    pub fn write_transcript(&self, path: impl AsRef<Path>) -> Result<(), CodebookError> {
        write_transcript(path, &self.records())
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, system_prompt: &str, user_text: &str) -> Result<String, CodebookError> {
        let reply = self.inner.complete(system_prompt, user_text)?;
        self.records
            .lock()
            .expect("record lock")
            .push(TranscriptRecord {
                prompt_hash: prompt_hash(system_prompt, user_text),
                system_prompt: system_prompt.to_string(),
                user_text: user_text.to_string(),
                reply: reply.clone(),
            });
        Ok(reply)
    }

    fn version(&self) -> &str {
        self.inner.version()
    }
}

/// Test double that answers with a fixed reply sequence in call order,
/// ignoring the prompts.
pub struct ScriptedClient {
    replies: Mutex<VecDeque<String>>,
    version: String,
}

impl ScriptedClient {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            version: "scripted".to_string(),
        }
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, _system_prompt: &str, user_text: &str) -> Result<String, CodebookError> {
        self.replies
            .lock()
            .expect("script lock")
            .pop_front()
            .ok_or_else(|| CodebookError::NoRecordedReply {
                prompt_hash: "script-exhausted".to_string(),
                user_text: truncate_for_error(user_text),
            })
    }

    fn version(&self) -> &str {
        &self.version
    }
}

/// Request payload handed to a [`CommandClient`] program on stdin.
#[derive(Debug, Serialize)]
struct CommandRequest<'a> {
    system_prompt: &'a str,
    user_text: &'a str,
}

/// Live adapter that shells out per request: the program receives
/// `{"system_prompt": ..., "user_text": ...}` on stdin and must print the
/// reply to stdout. Keeps the toolkit vendor-neutral; wrap it in a
/// [`RecordingClient`] so live runs stay reproducible.
pub struct CommandClient {
    program: PathBuf,
    args: Vec<String>,
    version: String,
}

impl CommandClient {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        let program = program.into();
        let version = format!("command:{}", program.display());
        Self {
            program,
            args,
            version,
        }
    }
}

impl LlmClient for CommandClient {
    fn complete(&self, system_prompt: &str, user_text: &str) -> Result<String, CodebookError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let payload = serde_json::to_string(&CommandRequest {
            system_prompt,
            user_text,
        })
        .expect("request serializes");
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(payload.as_bytes())?;
        let output = child.wait_with_output()?;
        if !output.status.success() {
            return Err(CodebookError::ClientFailure(format!(
                "{} exited with {}",
                self.program.display(),
                output.status
            )));
        }
        Ok(String::from_utf8_lossy(&output.stdout).trim().to_string())
    }

    fn version(&self) -> &str {
        &self.version
    }
}
