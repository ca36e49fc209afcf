//! The `bench` command line. Each subcommand builds the same request body
//! the HTTP API takes and passes it to the [`Gateway`]; `--json` prints the
//! response body unchanged.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::config::{load_ruleset, WorkbenchConfig};
use crate::gateway::{
    AugmentRequest, CommitRequest, FixRequest, Gateway, Response, RestoreRequest, RulesetRef,
    RunRequest, TaxonomyRequest, TextRequest,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bench",
    version,
    about = "Compile, run, analyze, augment and version workbench scripts"
)]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "BENCH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Version store directory (overrides the config).
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Policy JSON for `run` (overrides the config's default policy).
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    /// Ruleset name, or path to a ruleset JSON file.
    #[arg(long, global = true)]
    pub ruleset: Option<String>,
    /// Print the API response body instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report compile diagnostics.
    Compile { file: PathBuf },
    /// Compile and execute under the sandbox policy.
    Run { file: PathBuf },
    /// Report analyzer diagnostics and the fixes on offer.
    Analyze { file: PathBuf },
    /// Apply a code fix and print the rewritten script.
    Fix {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        diagnostic: usize,
        #[arg(long = "fix", default_value_t = 0)]
        fix_index: usize,
        /// Apply every fix until none remain.
        #[arg(long)]
        all: bool,
        /// Write the result back to the file.
        #[arg(long)]
        in_place: bool,
    },
    /// Compute augmentation spans with `--ruleset`.
    Augment {
        file: PathBuf,
        /// `IDENT=Display` pairs for parameterized rulesets.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, String)>,
    },
    /// Show which taxonomy attributes the `--ruleset` rules use.
    Taxonomy {
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, String)>,
    },
    /// List ruleset names.
    Rulesets,
    /// Print a fresh script id.
    NewId,
    /// Store a new version of a script.
    Commit {
        id: String,
        file: PathBuf,
        #[arg(long, env = "BENCH_AUTHOR")]
        author: String,
        #[arg(long, env = "BENCH_EMAIL")]
        email: String,
        #[arg(short, long)]
        message: String,
    },
    /// List a script's versions, newest first.
    History { id: String },
    /// Print the script text of one version.
    Show { id: String, hash: String },
    /// Make an older version current again by committing it on top.
    Restore {
        id: String,
        hash: String,
        #[arg(long, env = "BENCH_AUTHOR")]
        author: String,
        #[arg(long, env = "BENCH_EMAIL")]
        email: String,
    },
    /// Verify every stored object and reference.
    Fsck,
    /// Start the HTTP service.
    Serve {
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
    },
}

fn parse_param(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected IDENT=Display, got `{s}`"))
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run(cli, &mut out, &mut err)
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

/// Runs a parsed command, writing to `out` and `err`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(Usage(message)) => {
            let _ = writeln!(err, "bench: {message}");
            EXIT_USAGE
        }
    }
}

fn read_text(path: &Path) -> Result<String, Usage> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))
}

fn body<T: Serialize>(req: &T) -> Vec<u8> {
    serde_json::to_vec(req).expect("serializable request")
}

fn ruleset_ref(cli_ruleset: &Option<String>) -> Result<RulesetRef, Usage> {
    let name = cli_ruleset
        .clone()
        .ok_or_else(|| Usage("--ruleset is required".into()))?;
    let path = Path::new(&name);
    if name.ends_with(".json") || path.is_file() {
        Ok(RulesetRef::Inline(load_ruleset(path)?))
    } else {
        Ok(RulesetRef::Name(name))
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Usage> {
    let mut config = match &cli.config {
        Some(path) => WorkbenchConfig::load(path)?,
        None => WorkbenchConfig::default(),
    };
    if let Some(store) = &cli.store {
        config.store = store.clone();
    }

    if let Command::Serve { listen } = &cli.command {
        if let Some(addr) = listen {
            config.listen = *addr;
        }
        return serve(config, err);
    }

    let gateway = Gateway::new(config);
    let (method, path, request): (&str, String, Vec<u8>) = match &cli.command {
        Command::Compile { file } => (
            "POST",
            "/compile".into(),
            body(&TextRequest {
                text: read_text(file)?,
            }),
        ),
        Command::Run { file } => {
            let policy = match &cli.policy {
                Some(p) => Some(serde_json::from_str::<Value>(&read_text(p)?)?),
                None => None,
            };
            (
                "POST",
                "/run".into(),
                body(&RunRequest {
                    text: read_text(file)?,
                    policy,
                }),
            )
        }
        Command::Analyze { file } => (
            "POST",
            "/analyze".into(),
            body(&TextRequest {
                text: read_text(file)?,
            }),
        ),
        Command::Fix {
            file,
            diagnostic,
            fix_index,
            all,
            ..
        } => (
            "POST",
            "/fix".into(),
            body(&FixRequest {
                text: read_text(file)?,
                diagnostic_index: *diagnostic,
                fix_index: *fix_index,
                all: *all,
            }),
        ),
        Command::Augment { file, params } => (
            "POST",
            "/augment".into(),
            body(&AugmentRequest {
                text: read_text(file)?,
                ruleset: ruleset_ref(&cli.ruleset)?,
                params: params.iter().cloned().collect::<BTreeMap<_, _>>(),
            }),
        ),
        Command::Taxonomy { params } => (
            "POST",
            "/taxonomy".into(),
            body(&TaxonomyRequest {
                ruleset: ruleset_ref(&cli.ruleset)?,
                params: params.iter().cloned().collect(),
            }),
        ),
        Command::Rulesets => ("GET", "/rulesets".into(), Vec::new()),
        Command::NewId => ("POST", "/scripts".into(), Vec::new()),
        Command::Commit {
            id,
            file,
            author,
            email,
            message,
        } => (
            "POST",
            format!("/scripts/{id}/commit"),
            body(&CommitRequest {
                text: read_text(file)?,
                author: author.clone(),
                email: email.clone(),
                message: message.clone(),
            }),
        ),
        Command::History { id } => ("GET", format!("/scripts/{id}/history"), Vec::new()),
        Command::Show { id, hash } => ("GET", format!("/scripts/{id}/versions/{hash}"), Vec::new()),
        Command::Restore {
            id,
            hash,
            author,
            email,
        } => (
            "POST",
            format!("/scripts/{id}/restore"),
            body(&RestoreRequest {
                hash: hash.clone(),
                author: author.clone(),
                email: email.clone(),
            }),
        ),
        Command::Fsck => ("GET", "/fsck".into(), Vec::new()),
        Command::Serve { .. } => unreachable!("handled above"),
    };

    let response = gateway.handle(method, &path, &request);
    if cli.json {
        out.write_all(response.body.as_bytes())?;
    }
    if !response.ok() {
        if !cli.json {
            let (kind, message) = error_of(&response);
            writeln!(err, "error: {kind}: {message}")?;
        }
        // A rejected request means the arguments were wrong.
        return Ok(if response.status == 400 {
            EXIT_USAGE
        } else {
            EXIT_FAILED
        });
    }
    let result = result_of(&response);
    if !cli.json {
        summarize(&cli.command, &result, out)?;
    }
    if let Command::Fix {
        file,
        in_place: true,
        ..
    } = &cli.command
    {
        let new_text = result["new_text"].as_str().unwrap_or_default();
        std::fs::write(file, new_text)
            .map_err(|e| Usage(format!("cannot write {}: {e}", file.display())))?;
    }
    Ok(if failed(&cli.command, &result) {
        EXIT_FAILED
    } else {
        EXIT_OK
    })
}

fn result_of(response: &Response) -> Value {
    serde_json::from_str::<Value>(&response.body)
        .map(|mut v| v["result"].take())
        .unwrap_or(Value::Null)
}

fn error_of(response: &Response) -> (String, String) {
    let v: Value = serde_json::from_str(&response.body).unwrap_or(Value::Null);
    let text = |key: &str| v["error"][key].as_str().unwrap_or("?").to_string();
    (text("kind"), text("message"))
}

fn has_error_diagnostic(list: &Value) -> bool {
    list.as_array()
        .is_some_and(|ds| ds.iter().any(|d| d["severity"] == "error"))
}

/// Whether a successful response still means failure for the exit code.
fn failed(command: &Command, result: &Value) -> bool {
    match command {
        Command::Compile { .. } | Command::Analyze { .. } => {
            has_error_diagnostic(&result["diagnostics"])
        }
        Command::Run { .. } => {
            has_error_diagnostic(&result["compile_diagnostics"]) || !result["fault"].is_null()
        }
        Command::Fsck => result["findings"].as_array().is_some_and(|f| !f.is_empty()),
        _ => false,
    }
}

fn diagnostic_line(d: &Value) -> String {
    format!(
        "{}:{}: {}[{}]: {}",
        d["span"]["line"],
        d["span"]["column"],
        d["severity"].as_str().unwrap_or("?"),
        d["code"].as_str().unwrap_or("?"),
        d["message"].as_str().unwrap_or("")
    )
}

fn render_value(v: &Value) -> String {
    match v["type"].as_str() {
        Some("string") => format!("{:?}", v["value"].as_str().unwrap_or_default()),
        Some("unit") => "()".into(),
        _ => v["value"].to_string(),
    }
}

fn summarize(command: &Command, r: &Value, out: &mut dyn Write) -> std::io::Result<()> {
    let empty = Vec::new();
    let list = |key: &str| r[key].as_array().unwrap_or(&empty).clone();
    match command {
        Command::Compile { .. } => {
            let ds = list("diagnostics");
            if ds.is_empty() {
                writeln!(out, "ok: no diagnostics")?;
            }
            for d in &ds {
                writeln!(out, "{}", diagnostic_line(d))?;
            }
        }
        Command::Analyze { .. } => {
            let ds = list("diagnostics");
            if ds.is_empty() {
                writeln!(out, "ok: no diagnostics")?;
            }
            for (d, fixes) in ds.iter().zip(list("fixes")) {
                writeln!(out, "{}", diagnostic_line(d))?;
                for f in fixes.as_array().unwrap_or(&empty) {
                    writeln!(out, "    fix: {}", f["title"].as_str().unwrap_or(""))?;
                }
            }
        }
        Command::Run { .. } => {
            for d in &list("compile_diagnostics") {
                writeln!(out, "{}", diagnostic_line(d))?;
            }
            let console = r["console"].as_str().unwrap_or_default();
            if !console.is_empty() {
                writeln!(out, "--- console ---")?;
                out.write_all(console.as_bytes())?;
                if !console.ends_with('\n') {
                    writeln!(out)?;
                }
                writeln!(out, "---------------")?;
            }
            if !r["return_value"].is_null() {
                writeln!(out, "return: {}", render_value(&r["return_value"]))?;
            }
            if !r["fault"].is_null() {
                let f = &r["fault"];
                writeln!(
                    out,
                    "fault: {} ({}): {}",
                    f["kind"].as_str().unwrap_or("?"),
                    f["code"].as_str().unwrap_or("?"),
                    f["message"].as_str().unwrap_or("")
                )?;
            }
            writeln!(out, "steps: {}", r["steps_used"])?;
        }
        Command::Fix { in_place, .. } => {
            if !in_place {
                out.write_all(r["new_text"].as_str().unwrap_or_default().as_bytes())?;
            } else {
                for f in list("applied") {
                    writeln!(out, "applied: {}", f["title"].as_str().unwrap_or(""))?;
                }
            }
        }
        Command::Augment { .. } => {
            for e in list("errors") {
                writeln!(
                    out,
                    "rule error: {} {}: {}",
                    e["rule_id"].as_str().unwrap_or("?"),
                    e["kind"].as_str().unwrap_or("?"),
                    e["message"].as_str().unwrap_or("")
                )?;
            }
            for s in list("spans") {
                writeln!(
                    out,
                    "{}..{}\t{}:{}\t{}\t{}\t{}",
                    s["span"]["start"],
                    s["span"]["end"],
                    s["span"]["line"],
                    s["span"]["column"],
                    s["stage"].as_str().unwrap_or("?"),
                    s["rule_id"].as_str().unwrap_or("?"),
                    s["effects"]
                )?;
            }
        }
        Command::Taxonomy { .. } => {
            for row in list("rows") {
                writeln!(
                    out,
                    "{}\tvisualization={}\tlocation={}\ttarget={}\tinteraction={}",
                    row["rule_id"].as_str().unwrap_or("?"),
                    row["visualization"],
                    row["location"],
                    row["target"],
                    row["interaction"]
                )?;
            }
        }
        Command::Rulesets => {
            for n in list("names") {
                writeln!(out, "{}", n.as_str().unwrap_or_default())?;
            }
        }
        Command::NewId => writeln!(out, "{}", r["id"].as_str().unwrap_or_default())?,
        Command::Commit { .. } | Command::Restore { .. } => {
            writeln!(out, "{}", r["hash"].as_str().unwrap_or_default())?;
        }
        Command::History { .. } => {
            writeln!(out, "HASH\tTIMESTAMP\tAUTHOR\tMESSAGE")?;
            for e in list("entries") {
                let message = e["message"].as_str().unwrap_or_default();
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    e["hash"].as_str().unwrap_or_default(),
                    e["timestamp"].as_str().unwrap_or_default(),
                    e["author"].as_str().unwrap_or_default(),
                    message.lines().next().unwrap_or_default()
                )?;
            }
        }
        Command::Show { .. } => out.write_all(r["text"].as_str().unwrap_or_default().as_bytes())?,
        Command::Fsck => {
            let findings = list("findings");
            if findings.is_empty() {
                writeln!(out, "ok: store is consistent")?;
            }
            for f in findings {
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    f["kind"].as_str().unwrap_or("?"),
                    f["subject"].as_str().unwrap_or("?"),
                    f["detail"].as_str().unwrap_or("")
                )?;
            }
        }
        Command::Serve { .. } => {}
    }
    Ok(())
}

fn serve(config: WorkbenchConfig, err: &mut dyn Write) -> Result<i32, Usage> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    let addr = config.listen;
    let gateway = Arc::new(Gateway::new(config));
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        writeln!(err, "bench: listening on http://{}", listener.local_addr()?)?;
        crate::server::serve(gateway, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok::<_, std::io::Error>(())
    })?;
    Ok(EXIT_OK)
}
