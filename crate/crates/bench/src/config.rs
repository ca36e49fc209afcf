use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use bench_core::augment::{RuleSet, BUILTIN_RULESETS};
use bench_core::lang::Severity;
use bench_core::sandbox::{ExecutionPolicy, PolicyDocument, VirtualFs};
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:7878";
pub const DEFAULT_BODY_LIMIT: usize = 1024 * 1024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid policy {path}: {message}")]
    Policy { path: PathBuf, message: String },
    #[error("invalid ruleset {path}: {message}")]
    Ruleset { path: PathBuf, message: String },
    #[error("ruleset name `{0}` is used twice")]
    DuplicateRuleset(String),
    #[error("{0}")]
    Invalid(String),
}

/// The TOML config file. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    listen: Option<String>,
    store: Option<PathBuf>,
    policy: Option<PathBuf>,
    #[serde(default)]
    rulesets: Vec<PathBuf>,
    max_body_bytes: Option<usize>,
    sha1_severity: Option<Severity>,
    fixed_timestamp: Option<String>,
}

#[derive(Debug, Clone)]
pub struct WorkbenchConfig {
    pub listen: SocketAddr,
    pub store: PathBuf,
    /// Used by `/run` when the request has no policy.
    pub policy: Option<PolicyDocument>,
    /// Rulesets loaded from files, by file stem.
    pub rulesets: BTreeMap<String, RuleSet>,
    pub max_body_bytes: usize,
    pub sha1_severity: Severity,
    /// Commit time to use instead of the current time.
    pub fixed_timestamp: Option<String>,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            listen: DEFAULT_LISTEN.parse().expect("valid default address"),
            store: PathBuf::from("bench-store"),
            policy: None,
            rulesets: BTreeMap::new(),
            max_body_bytes: DEFAULT_BODY_LIMIT,
            sha1_severity: Severity::Warning,
            fixed_timestamp: None,
        }
    }
}

impl WorkbenchConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        let file: ConfigFile = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let mut config = WorkbenchConfig::default();
        if let Some(listen) = file.listen {
            config.listen = listen
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("invalid listen address `{listen}`")))?;
        }
        if let Some(store) = file.store {
            config.store = resolve(store);
        }
        if let Some(policy) = file.policy {
            config.policy = Some(load_policy(&resolve(policy))?);
        }
        for ruleset in file.rulesets {
            config.add_ruleset(&resolve(ruleset))?;
        }
        if let Some(cap) = file.max_body_bytes {
            if cap == 0 {
                return Err(ConfigError::Invalid(
                    "max_body_bytes must be positive".into(),
                ));
            }
            config.max_body_bytes = cap;
        }
        if let Some(severity) = file.sha1_severity {
            config.sha1_severity = severity;
        }
        if let Some(ts) = file.fixed_timestamp {
            if !bench_core::vcs::is_rfc3339_utc(&ts) {
                return Err(ConfigError::Invalid(format!(
                    "fixed_timestamp `{ts}` is not RFC 3339 UTC"
                )));
            }
            config.fixed_timestamp = Some(ts);
        }
        Ok(config)
    }

    /// Loads a ruleset file under its file stem.
    pub fn add_ruleset(&mut self, path: &Path) -> Result<String, ConfigError> {
        let set = load_ruleset(path)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| {
                ConfigError::Invalid(format!("bad ruleset file name {}", path.display()))
            })?
            .to_string();
        if BUILTIN_RULESETS.contains(&name.as_str()) || self.rulesets.contains_key(&name) {
            return Err(ConfigError::DuplicateRuleset(name));
        }
        self.rulesets.insert(name.clone(), set);
        Ok(name)
    }

    pub fn default_policy(&self) -> Result<(ExecutionPolicy, VirtualFs), String> {
        match &self.policy {
            Some(doc) => doc.build().map_err(|e| e.to_string()),
            None => Ok((ExecutionPolicy::standard(), VirtualFs::new())),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.into(),
        source,
    })
}

pub fn load_policy(path: &Path) -> Result<PolicyDocument, ConfigError> {
    let doc: PolicyDocument =
        serde_json::from_str(&read(path)?).map_err(|e| ConfigError::Policy {
            path: path.into(),
            message: e.to_string(),
        })?;
    doc.build().map_err(|e| ConfigError::Policy {
        path: path.into(),
        message: e.to_string(),
    })?;
    Ok(doc)
}

pub fn load_ruleset(path: &Path) -> Result<RuleSet, ConfigError> {
    serde_json::from_str(&read(path)?).map_err(|e| ConfigError::Ruleset {
        path: path.into(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = WorkbenchConfig::default();
        assert_eq!(c.listen.to_string(), "127.0.0.1:7878");
        assert_eq!(c.max_body_bytes, DEFAULT_BODY_LIMIT);
    }

    #[test]
    fn loads_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("policy.json"),
            r#"{"profile":{"name":"p","capabilities":["console_write"],"integrity":"low"}}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("mine.json"), r#"{"rules":[]}"#).unwrap();
        let cfg = dir.path().join("bench.toml");
        std::fs::write(
            &cfg,
            "listen = \"127.0.0.1:9000\"\nstore = \"s\"\npolicy = \"policy.json\"\nrulesets = [\"mine.json\"]\nmax_body_bytes = 10\nsha1_severity = \"error\"\n",
        )
        .unwrap();
        let c = WorkbenchConfig::load(&cfg).unwrap();
        assert_eq!(c.listen.port(), 9000);
        assert_eq!(c.store, dir.path().join("s"));
        assert!(c.policy.is_some());
        assert!(c.rulesets.contains_key("mine"));
        assert_eq!(c.sha1_severity, Severity::Error);
    }

    #[test]
    fn rejects_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bench.toml");
        for bad in [
            "max_body_bytes = 0",
            "listen = \"nowhere\"",
            "colour = 1",
            "fixed_timestamp = \"now\"",
        ] {
            std::fs::write(&cfg, bad).unwrap();
            assert!(WorkbenchConfig::load(&cfg).is_err(), "{bad}");
        }
        std::fs::write(dir.path().join("smalltalk.json"), "{}").unwrap();
        let mut c = WorkbenchConfig::default();
        assert!(matches!(
            c.add_ruleset(&dir.path().join("smalltalk.json")),
            Err(ConfigError::DuplicateRuleset(_))
        ));
    }
}
