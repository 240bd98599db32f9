//! Sampling completions from a chat-completion endpoint, with an on-disk
//! JSONL cache, and turning them into completion sets.

mod prompt;

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::grammar::Grammar;
use crate::pcfg::{CompletionSet, LearnMode};

pub use prompt::{arc_prompt, grammar_ebnf, string_prompt, ArcDemo, DEFAULT_PROMPT_TOKENS};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt too large: about {tokens} tokens, limit {limit}")]
    PromptTooLarge { tokens: usize, limit: usize },
    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache {path} line {line}: {message}")]
    CorruptCache { path: PathBuf, line: usize, message: String },
    #[error("sampling stopped after {attempts} attempts with {} of {wanted} completions: {message}", partial.len())]
    Sampling {
        attempts: u32,
        wanted: usize,
        message: String,
        partial: Vec<CompletionRecord>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseFormat {
    #[default]
    Text,
    /// A JSON object with a `code` field.
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub system: String,
    pub user: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub n: usize,
    pub format: ResponseFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub task: String,
    pub index: usize,
    pub text: String,
    pub code: String,
    /// Seconds since the epoch.
    pub timestamp: u64,
    pub model: String,
}

/// Where and how to sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    /// Completions requested per call.
    pub batch_size: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub request_timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            token_env: "OPENAI_API_KEY".into(),
            batch_size: 10,
            max_retries: 5,
            backoff_ms: 1000,
            max_backoff_ms: 30_000,
            request_timeout_secs: 120,
        }
    }
}

/// Append-only JSONL files, one per (task, model).
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn path(&self, task: &str, model: &str) -> PathBuf {
        let clean = |s: &str| s.replace(['/', '\\', ':'], "_");
        self.dir.join(format!("{}__{}.jsonl", clean(task), clean(model)))
    }

    /// Cached records in file order; a missing file is an empty cache.
    pub fn load(&self, task: &str, model: &str) -> Result<Vec<CompletionRecord>, LlmError> {
        let path = self.path(task, model);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(LlmError::Cache { path, source }),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| LlmError::Cache { path: path.clone(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| LlmError::CorruptCache {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    pub fn append(&self, records: &[CompletionRecord]) -> Result<(), LlmError> {
        let Some(first) = records.first() else {
            return Ok(());
        };
        let path = self.path(&first.task, &first.model);
        let io = |source| LlmError::Cache { path: path.clone(), source };
        fs::create_dir_all(&self.dir).map_err(io)?;
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).expect("records serialize"));
            buf.push('\n');
        }
        f.write_all(buf.as_bytes()).map_err(io)?;
        f.flush().map_err(io)
    }
}

/// Pulls the program out of a raw completion. JSON responses give their
/// `code` field (empty when malformed); free text gives the longest fenced
/// block, else the whole text.
pub fn extract_code(text: &str, format: ResponseFormat) -> String {
    match format {
        ResponseFormat::Json => {
            let body = longest_fence(text).unwrap_or(text);
            serde_json::from_str::<serde_json::Value>(body.trim())
                .ok()
                .and_then(|v| v.get("code").and_then(|c| c.as_str()).map(str::to_string))
                .unwrap_or_default()
        }
        ResponseFormat::Text => longest_fence(text).unwrap_or(text).trim().to_string(),
    }
}

fn longest_fence(text: &str) -> Option<&str> {
    let mut best: Option<&str> = None;
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // skip the language tag
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let Some(close) = body.find("```") else { break };
        let block = &body[..close];
        if best.is_none_or(|b| block.len() > b.len()) {
            best = Some(block);
        }
        rest = &body[close + 3..];
    }
    best
}

enum Failure {
    Retry(String),
    Fatal(String),
}

fn request(agent: &ureq::Agent, spec: &PromptSpec, ep: &EndpointConfig, n: usize) -> Result<Vec<String>, Failure> {
    let mut body = json!({
        "model": spec.model,
        "messages": [
            {"role": "system", "content": spec.system},
            {"role": "user", "content": spec.user},
        ],
        "temperature": spec.temperature,
        "max_tokens": spec.max_tokens,
        "n": n,
    });
    if spec.format == ResponseFormat::Json {
        body["response_format"] = json!({"type": "json_object"});
    }
    let url = format!("{}/chat/completions", ep.base_url.trim_end_matches('/'));
    let mut req = agent.post(&url);
    if let Ok(token) = std::env::var(&ep.token_env) {
        req = req.header("Authorization", &format!("Bearer {token}"));
    }
    let mut resp = req.send_json(&body).map_err(|e| Failure::Retry(e.to_string()))?;
    let status = resp.status().as_u16();
    if status == 429 || status >= 500 {
        return Err(Failure::Retry(format!("HTTP {status}")));
    }
    if status >= 400 {
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        return Err(Failure::Fatal(format!("HTTP {status}: {text}")));
    }
    let v: serde_json::Value = resp
        .body_mut()
        .read_json()
        .map_err(|e| Failure::Retry(format!("bad response body: {e}")))?;
    let texts: Vec<String> = v["choices"]
        .as_array()
        .map(|cs| {
            cs.iter()
                .filter_map(|c| c["message"]["content"].as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    if texts.is_empty() {
        return Err(Failure::Retry("response had no choices".into()));
    }
    Ok(texts)
}

/// Returns `spec.n` completions for `task`, cache first. New completions are
/// requested in batches, retried with exponential backoff, and appended to
/// the cache as they arrive.
pub fn sample(spec: &PromptSpec, task: &str, ep: &EndpointConfig, cache: &Cache) -> Result<Vec<CompletionRecord>, LlmError> {
    let mut records = cache.load(task, &spec.model)?;
    if records.len() >= spec.n {
        records.truncate(spec.n);
        return Ok(records);
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(ep.request_timeout_secs)))
        .http_status_as_error(false)
        .build()
        .into();
    let mut attempts = 0;
    while records.len() < spec.n {
        let want = ep.batch_size.max(1).min(spec.n - records.len());
        let mut tries = 0;
        let texts = loop {
            attempts += 1;
            match request(&agent, spec, ep, want) {
                Ok(t) => break t,
                Err(Failure::Retry(m)) if tries < ep.max_retries => {
                    let wait = ep.backoff_ms.saturating_mul(1 << tries.min(16)).min(ep.max_backoff_ms);
                    log::warn!("{task}: {m}; retrying in {wait} ms");
                    std::thread::sleep(Duration::from_millis(wait));
                    tries += 1;
                }
                Err(Failure::Retry(message) | Failure::Fatal(message)) => {
                    return Err(LlmError::Sampling {
                        attempts,
                        wanted: spec.n,
                        message,
                        partial: records,
                    })
                }
            }
        };
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let fresh: Vec<CompletionRecord> = texts
            .into_iter()
            .take(spec.n - records.len())
            .enumerate()
            .map(|(i, text)| CompletionRecord {
                task: task.to_string(),
                index: records.len() + i,
                code: extract_code(&text, spec.format),
                text,
                timestamp: now,
                model: spec.model.clone(),
            })
            .collect();
        cache.append(&fresh)?;
        records.extend(fresh);
    }
    Ok(records)
}

/// Parses each record's code (after `prepare`) under `grammar`. Strict mode
/// drops failures; the other modes keep them as token streams.
pub fn to_completion_set(
    task: &str,
    records: &[CompletionRecord],
    grammar: &Grammar,
    mode: LearnMode,
    prepare: impl Fn(&str) -> String,
) -> CompletionSet {
    let codes = records.iter().map(|r| prepare(&r.code)).collect();
    CompletionSet::build(task, grammar, codes, mode == LearnMode::Strict)
}

/// Reads records from any JSONL file (for fixtures outside a cache dir).
pub fn read_records(path: &Path) -> Result<Vec<CompletionRecord>, LlmError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (task, model) = name
        .strip_suffix(".jsonl")
        .and_then(|s| s.split_once("__"))
        .ok_or_else(|| LlmError::CorruptCache {
            path: path.to_path_buf(),
            line: 0,
            message: "expected <task>__<model>.jsonl".into(),
        })?;
    Cache::new(dir).load(task, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Read;
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn spec(n: usize) -> PromptSpec {
        PromptSpec {
            system: "sys".into(),
            user: "user".into(),
            model: "mock-model".into(),
            temperature: 1.0,
            max_tokens: 100,
            n,
            format: ResponseFormat::Json,
        }
    }

    /// Serves chat-completion responses; the first `fail` requests get 429.
    fn mock(fail: usize, reply: &'static str) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let calls = Arc::new(AtomicUsize::new(0));
        let seen = calls.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let mut s = stream.unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                // read headers, then the body by content-length
                let (start, total) = loop {
                    let k = s.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..k]);
                    if let Some(end) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        let head = String::from_utf8_lossy(&buf[..end]).to_ascii_lowercase();
                        let len: usize = head
                            .lines()
                            .find_map(|l| l.strip_prefix("content-length:"))
                            .map_or(0, |v| v.trim().parse().unwrap());
                        break (end + 4, end + 4 + len);
                    }
                };
                while buf.len() < total {
                    let k = s.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..k]);
                }
                let body: serde_json::Value = serde_json::from_slice(&buf[start..total]).unwrap_or(json!({"n": 1}));
                let k = seen.fetch_add(1, Ordering::SeqCst);
                let (status, payload) = if k < fail {
                    ("429 Too Many Requests", "{}".to_string())
                } else {
                    let n = body["n"].as_u64().unwrap_or(1) as usize;
                    let choices: Vec<_> = (0..n).map(|_| json!({"message": {"content": reply}})).collect();
                    ("200 OK", json!({"choices": choices}).to_string())
                };
                let resp = format!(
                    "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                s.write_all(resp.as_bytes()).unwrap();
            }
        });
        (url, calls)
    }

    fn endpoint(url: String) -> EndpointConfig {
        EndpointConfig {
            base_url: url,
            token_env: "GUIDED_SYNTH_TEST_NO_TOKEN".into(),
            backoff_ms: 1,
            max_backoff_ms: 4,
            ..EndpointConfig::default()
        }
    }

    #[test]
    fn batches_and_caches() {
        let (url, calls) = mock(0, r#"{"nl_description": "x", "code": "(do)"}"#);
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let recs = sample(&spec(100), "t1", &endpoint(url.clone()), &cache).unwrap();
        assert_eq!(recs.len(), 100);
        assert_eq!(calls.load(Ordering::SeqCst), 10);
        assert!(recs.iter().all(|r| r.code == "(do)"));
        assert_eq!(recs[57].index, 57);
        // warm cache: no more calls
        let again = sample(&spec(100), "t1", &endpoint(url), &cache).unwrap();
        assert_eq!(again, recs);
        assert_eq!(calls.load(Ordering::SeqCst), 10);
    }

    #[test]
    fn retries_rate_limits() {
        let (url, calls) = mock(2, "not json at all");
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let recs = sample(&spec(3), "t2", &endpoint(url), &cache).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(recs.len(), 3);
        // malformed structured output keeps the raw text, with empty code
        assert_eq!(recs[0].text, "not json at all");
        assert_eq!(recs[0].code, "");
        assert_eq!(cache.load("t2", "mock-model").unwrap(), recs);
    }

    #[test]
    fn gives_up_with_partial_results() {
        let (url, _) = mock(usize::MAX, "");
        let dir = tempfile::tempdir().unwrap();
        let ep = EndpointConfig {
            max_retries: 1,
            ..endpoint(url)
        };
        match sample(&spec(5), "t3", &ep, &Cache::new(dir.path())) {
            Err(LlmError::Sampling { attempts, partial, .. }) => {
                assert_eq!(attempts, 2);
                assert!(partial.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn code_extraction() {
        let fenced = "Here:\n```lisp\n(a)\n```\nand\n```\n(longer one)\n```";
        assert_eq!(extract_code(fenced, ResponseFormat::Text), "(longer one)");
        assert_eq!(extract_code("  (x) ", ResponseFormat::Text), "(x)");
        assert_eq!(extract_code(r#"{"code": "(do)"}"#, ResponseFormat::Json), "(do)");
        assert_eq!(extract_code("```json\n{\"code\": \"(y)\"}\n```", ResponseFormat::Json), "(y)");
        assert_eq!(extract_code(r#"{"nl": 1}"#, ResponseFormat::Json), "");
    }

    #[test]
    fn strict_and_lenient_split() {
        let g = crate::grammar::tests::tiny();
        let recs: Vec<CompletionRecord> = ["a", "f( a", "g( a , a )"]
            .iter()
            .enumerate()
            .map(|(i, c)| CompletionRecord {
                task: "t".into(),
                index: i,
                text: c.to_string(),
                code: c.to_string(),
                timestamp: 0,
                model: "m".into(),
            })
            .collect();
        let strict = to_completion_set("t", &recs, &g, LearnMode::Strict, str::to_string);
        let lenient = to_completion_set("t", &recs, &g, LearnMode::NonStrict, str::to_string);
        assert_eq!((strict.parsed.len(), strict.lexed.len()), (2, 0));
        assert_eq!((lenient.parsed.len(), lenient.lexed.len()), (2, 1));
        let empty = to_completion_set("t", &[], &g, LearnMode::NonStrict, str::to_string);
        assert!(empty.is_empty());
    }
}
