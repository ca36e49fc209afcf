//! Request routing shared by the HTTP server and the CLI.
//!
//! [`Gateway::handle`] takes a method, a path and a raw body and returns a
//! status code with a JSON envelope. The server and the CLI both go through
//! it, so their output for the same request is the same bytes.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use bench_core::analyze::{apply_fix, fix_all, fixes_for, Analyzer, CodeFix};
use bench_core::augment::{
    builtin_ruleset, compute_spans, taxonomy_coverage, AugmentError, RuleSet, BUILTIN_RULESETS,
};
use bench_core::lang::{compile, run_with_clock, Clock, Diagnostic};
use bench_core::sandbox::PolicyDocument;
use bench_core::vcs::{ObjectId, ScriptId, Store, VcsError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::WorkbenchConfig;
use crate::disk::DiskBackend;

/// Stack for the thread that serves one request. Deeply nested scripts
/// recurse in both the parser and the interpreter.
const REQUEST_STACK_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    /// A JSON envelope followed by one newline.
    pub body: String,
}

impl Response {
    pub fn ok(&self) -> bool {
        self.status == 200
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
        }
    }

    fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        Self::new(400, kind, message)
    }

    fn not_found(kind: &'static str, message: impl Into<String>) -> Self {
        Self::new(404, kind, message)
    }
}

impl From<VcsError> for ApiError {
    fn from(e: VcsError) -> Self {
        let message = e.to_string();
        let (status, kind) = match e {
            VcsError::EmptyMessage => (400, "EmptyMessage"),
            VcsError::EmptyAuthor => (400, "EmptyAuthor"),
            VcsError::InvalidField(_) => (400, "InvalidField"),
            VcsError::InvalidTimestamp(_) => (400, "InvalidTimestamp"),
            VcsError::InvalidScriptId(_) => (400, "InvalidScriptId"),
            VcsError::InvalidHash(_) => (400, "InvalidHash"),
            VcsError::UnknownCommit(_) => (404, "UnknownCommit"),
            VcsError::ForeignCommit(_) => (404, "ForeignCommit"),
            VcsError::Corrupt(_) => (500, "Corrupt"),
            VcsError::Backend(_) => (500, "StorageError"),
        };
        ApiError::new(status, kind, message)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    ok: bool,
    result: Option<()>,
    error: ErrorBody<'a>,
}

fn success(result_json: String) -> Response {
    Response {
        status: 200,
        body: format!("{{\"ok\":true,\"result\":{result_json},\"error\":null}}\n"),
    }
}

pub fn error_response(e: &ApiError) -> Response {
    let envelope = ErrorEnvelope {
        ok: false,
        result: None,
        error: ErrorBody {
            kind: e.kind,
            message: &e.message,
        },
    };
    let mut body = serde_json::to_string(&envelope).expect("serializable envelope");
    body.push('\n');
    Response {
        status: e.status,
        body,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, ApiError> {
    serde_json::to_string(value).map_err(|e| ApiError::new(500, "Internal", e.to_string()))
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => ApiError::bad_request("InvalidRequest", e.to_string()),
            _ => ApiError::bad_request("MalformedJson", e.to_string()),
        }
    })
}

// Request and response bodies.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<serde_json::Value>,
}

/// A ruleset by name, or given inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RulesetRef {
    Name(String),
    Inline(RuleSet),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentRequest {
    pub text: String,
    pub ruleset: RulesetRef,
    /// Parameters for parameterized built-ins such as `identifier_overlay`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyRequest {
    pub ruleset: RulesetRef,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixRequest {
    pub text: String,
    #[serde(default)]
    pub diagnostic_index: usize,
    #[serde(default)]
    pub fix_index: usize,
    /// Apply every offered fix until none remain; the indices are ignored.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub all: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitRequest {
    pub text: String,
    pub author: String,
    pub email: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestoreRequest {
    pub hash: String,
    pub author: String,
    pub email: String,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    diagnostics: &'a [Diagnostic],
}

#[derive(Serialize)]
struct Analysis<'a> {
    diagnostics: &'a [Diagnostic],
    /// `fixes[i]` are the fixes offered for `diagnostics[i]`.
    fixes: &'a [Vec<CodeFix>],
}

#[derive(Serialize)]
struct Fixed<'a> {
    new_text: &'a str,
    applied: &'a [CodeFix],
    diagnostics: &'a [Diagnostic],
}

#[derive(Serialize)]
struct Version<'a> {
    script_id: ScriptId,
    hash: &'a ObjectId,
    text: &'a str,
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_ms(&self) -> u64 {
        self.0.elapsed().as_millis().try_into().unwrap_or(u64::MAX)
    }
}

type Timestamp = Box<dyn Fn() -> String + Send + Sync>;

pub struct Gateway {
    config: WorkbenchConfig,
    analyzer: Analyzer,
    store: Mutex<Option<Store<DiskBackend>>>,
    now: Timestamp,
}

fn utc_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl Gateway {
    pub fn new(config: WorkbenchConfig) -> Self {
        let now: Timestamp = match config.fixed_timestamp.clone() {
            Some(ts) => Box::new(move || ts.clone()),
            None => Box::new(utc_now),
        };
        Gateway {
            analyzer: Analyzer::with_sha1_severity(config.sha1_severity),
            config,
            store: Mutex::new(None),
            now,
        }
    }

    /// Replaces the source of commit timestamps.
    pub fn with_clock(mut self, now: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.now = Box::new(now);
        self
    }

    pub fn config(&self) -> &WorkbenchConfig {
        &self.config
    }

    /// Serves one request on a dedicated thread.
    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> Response {
        let outcome = std::thread::scope(|scope| {
            std::thread::Builder::new()
                .name("bench-request".into())
                .stack_size(REQUEST_STACK_BYTES)
                .spawn_scoped(scope, || self.dispatch(method, path, body))
                .map(|handle| handle.join())
        });
        match outcome {
            Ok(Ok(Ok(json))) => success(json),
            Ok(Ok(Err(e))) => error_response(&e),
            Ok(Err(_)) => {
                error_response(&ApiError::new(500, "Internal", "request handler panicked"))
            }
            Err(e) => error_response(&ApiError::new(500, "Internal", e.to_string())),
        }
    }

    fn dispatch(&self, method: &str, path: &str, body: &[u8]) -> Result<String, ApiError> {
        if body.len() > self.config.max_body_bytes {
            return Err(ApiError::new(
                413,
                "PayloadTooLarge",
                format!("request body exceeds {} bytes", self.config.max_body_bytes),
            ));
        }
        let path = path.split('?').next().unwrap_or_default();
        let segments: Vec<&str> = path.trim_start_matches('/').split('/').collect();
        let post = method.eq_ignore_ascii_case("POST");
        let get = method.eq_ignore_ascii_case("GET");
        let wrong_method = || {
            ApiError::new(
                405,
                "MethodNotAllowed",
                format!("{method} is not supported on {path}"),
            )
        };
        match segments.as_slice() {
            ["compile"] if post => self.compile(parse(body)?),
            ["run"] if post => self.run(parse(body)?),
            ["augment"] if post => self.augment(parse(body)?),
            ["analyze"] if post => self.analyze(parse(body)?),
            ["fix"] if post => self.fix(parse(body)?),
            ["taxonomy"] if post => self.taxonomy(parse(body)?),
            ["rulesets"] if get => self.rulesets(),
            ["fsck"] if get => self.fsck(),
            ["scripts"] if post => to_json(&serde_json::json!({
                "id": ScriptId::from_bytes(*uuid::Uuid::new_v4().as_bytes()),
            })),
            ["scripts", id, "commit"] if post => self.commit(parse_id(id)?, parse(body)?),
            ["scripts", id, "history"] if get => self.history(parse_id(id)?),
            ["scripts", id, "versions", hash] if get => self.version(parse_id(id)?, hash),
            ["scripts", id, "restore"] if post => self.restore(parse_id(id)?, parse(body)?),
            ["compile" | "run" | "augment" | "analyze" | "fix" | "taxonomy" | "rulesets"
            | "fsck" | "scripts"]
            | ["scripts", _, "commit" | "history" | "restore"]
            | ["scripts", _, "versions", _] => Err(wrong_method()),
            _ => Err(ApiError::not_found(
                "NotFound",
                format!("no endpoint at {path}"),
            )),
        }
    }

    fn compile(&self, req: TextRequest) -> Result<String, ApiError> {
        let compilation = compile(&req.text);
        to_json(&Diagnostics {
            diagnostics: &compilation.diagnostics,
        })
    }

    fn run(&self, req: RunRequest) -> Result<String, ApiError> {
        let (policy, mut world) = match req.policy {
            Some(value) => {
                let doc: PolicyDocument = serde_json::from_value(value)
                    .map_err(|e| ApiError::bad_request("InvalidPolicy", e.to_string()))?;
                doc.build()
                    .map_err(|e| ApiError::bad_request("InvalidPolicy", e.to_string()))?
            }
            None => self
                .config
                .default_policy()
                .map_err(|e| ApiError::new(500, "InvalidPolicy", e))?,
        };
        let clock = WallClock(Instant::now());
        let report = run_with_clock(&req.text, &policy, &mut world, &clock);
        to_json(&report)
    }

    fn resolve_ruleset(
        &self,
        r: RulesetRef,
        params: &BTreeMap<String, String>,
    ) -> Result<RuleSet, ApiError> {
        match r {
            RulesetRef::Inline(set) => Ok(set),
            RulesetRef::Name(name) => match builtin_ruleset(&name, params) {
                Ok(set) => Ok(set),
                Err(AugmentError::UnknownRuleset(_)) => {
                    self.config.rulesets.get(&name).cloned().ok_or_else(|| {
                        ApiError::not_found("UnknownRuleset", format!("unknown ruleset `{name}`"))
                    })
                }
            },
        }
    }

    fn augment(&self, req: AugmentRequest) -> Result<String, ApiError> {
        let set = self.resolve_ruleset(req.ruleset, &req.params)?;
        to_json(&compute_spans(&req.text, &set.rules, &set.catalog()))
    }

    fn taxonomy(&self, req: TaxonomyRequest) -> Result<String, ApiError> {
        let set = self.resolve_ruleset(req.ruleset, &req.params)?;
        to_json(&serde_json::json!({
            "rows": taxonomy_coverage(&set.rules, &set.catalog()),
        }))
    }

    fn rulesets(&self) -> Result<String, ApiError> {
        let mut names: Vec<&str> = BUILTIN_RULESETS.to_vec();
        names.extend(self.config.rulesets.keys().map(String::as_str));
        to_json(&serde_json::json!({ "names": names }))
    }

    fn analyze(&self, req: TextRequest) -> Result<String, ApiError> {
        let diagnostics = self.analyzer.analyze_text(&req.text);
        let fixes: Vec<Vec<CodeFix>> = diagnostics
            .iter()
            .map(|d| {
                if d.fixable {
                    fixes_for(d, &req.text)
                } else {
                    Vec::new()
                }
            })
            .collect();
        to_json(&Analysis {
            diagnostics: &diagnostics,
            fixes: &fixes,
        })
    }

    fn fix(&self, req: FixRequest) -> Result<String, ApiError> {
        let (new_text, applied) = if req.all {
            fix_all(&req.text, &self.analyzer)
        } else {
            let diagnostics = self.analyzer.analyze_text(&req.text);
            let diag = diagnostics.get(req.diagnostic_index).ok_or_else(|| {
                ApiError::bad_request(
                    "BadIndex",
                    format!(
                        "diagnostic_index {} is out of range ({} diagnostics)",
                        req.diagnostic_index,
                        diagnostics.len()
                    ),
                )
            })?;
            let fixes = fixes_for(diag, &req.text);
            let fix = fixes.get(req.fix_index).ok_or_else(|| {
                ApiError::bad_request(
                    "BadIndex",
                    format!(
                        "fix_index {} is out of range ({} fixes for {})",
                        req.fix_index,
                        fixes.len(),
                        diag.code
                    ),
                )
            })?;
            let result = apply_fix(&req.text, fix)
                .map_err(|e| ApiError::new(500, "FixFailed", e.to_string()))?;
            (result.new_text, vec![result.applied])
        };
        let diagnostics = self.analyzer.analyze_text(&new_text);
        to_json(&Fixed {
            new_text: &new_text,
            applied: &applied,
            diagnostics: &diagnostics,
        })
    }

    fn with_store<T>(
        &self,
        f: impl FnOnce(&mut Store<DiskBackend>) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let mut guard = self
            .store
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        if guard.is_none() {
            let backend = DiskBackend::open(&self.config.store).map_err(ApiError::from)?;
            *guard = Some(Store::new(backend));
        }
        f(guard.as_mut().expect("store opened above"))
    }

    fn commit(&self, id: ScriptId, req: CommitRequest) -> Result<String, ApiError> {
        let timestamp = (self.now)();
        let commit = self.with_store(|s| {
            Ok(s.commit(
                id,
                req.text.as_bytes(),
                &req.author,
                &req.email,
                &req.message,
                &timestamp,
            )?)
        })?;
        to_json(&commit)
    }

    fn history(&self, id: ScriptId) -> Result<String, ApiError> {
        let entries = self.with_store(|s| Ok(s.history(id)?))?;
        to_json(&serde_json::json!({ "script_id": id, "entries": entries }))
    }

    fn version(&self, id: ScriptId, hash: &str) -> Result<String, ApiError> {
        let (commit, bytes) = self.with_store(|s| {
            let commit = s.get_commit(hash)?;
            if commit.script_id != id {
                return Err(VcsError::ForeignCommit(hash.into()).into());
            }
            let bytes = s.get_version(hash)?;
            Ok((commit, bytes))
        })?;
        let text = String::from_utf8(bytes).map_err(|_| {
            ApiError::new(422, "NotText", format!("version {hash} is not UTF-8 text"))
        })?;
        to_json(&Version {
            script_id: id,
            hash: &commit.hash,
            text: &text,
        })
    }

    fn restore(&self, id: ScriptId, req: RestoreRequest) -> Result<String, ApiError> {
        let timestamp = (self.now)();
        let commit = self
            .with_store(|s| Ok(s.restore(id, &req.hash, &req.author, &req.email, &timestamp)?))?;
        to_json(&commit)
    }

    fn fsck(&self) -> Result<String, ApiError> {
        let findings = self.with_store(|s| Ok(s.fsck()?))?;
        to_json(&serde_json::json!({ "findings": findings }))
    }
}

fn parse_id(s: &str) -> Result<ScriptId, ApiError> {
    s.parse().map_err(ApiError::from)
}
