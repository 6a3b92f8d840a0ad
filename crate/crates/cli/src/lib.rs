//! `otforge` command line: schema introspection, sampling, compilation,
//! execution, corpus statistics, hardness scoring and the annotation
//! service.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.
//! Domain errors print one line to stderr: `error: <code>: <message>`.

pub mod input;
pub mod settings;

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use otforge_annotation::{Phase, Service, ServiceConfig, Store};
use otforge_core::analysis::hardness;
use otforge_core::analysis::{corpus_report_with, ReportOptions};
use otforge_core::ot::{serialize, validate};
use otforge_core::sampler::{BatchError, Sampler};
use otforge_core::schema::BridgeOverrides;
use otforge_core::sql::{compile, execute};
use otforge_core::tokenize::{words, SimpleTokenizer};
use otforge_core::{Database, ExecLimits, OperationTree, SampleConfig, SchemaGraph};
use serde::Serialize;

use crate::input::{read_items, read_text, Item};
use crate::settings::Settings;

/// A domain error: a stable code plus a one-line message.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::new("io", format!("{}: {e}", path.display()))
    }
}

fn err<E: std::fmt::Display>(code: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::new(code, e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "otforge", version, about = "Operation-tree corpus toolkit")]
pub struct Cli {
    /// TOML settings file; flags and OTFORGE_* variables take precedence.
    #[arg(long, global = true, env = "OTFORGE_SETTINGS")]
    pub settings: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DbArgs {
    /// Source SQLite database (opened read-only).
    #[arg(long, env = "OTFORGE_DB")]
    pub db: Option<PathBuf>,
    /// JSON file listing bridge tables, overriding detection.
    #[arg(long, env = "OTFORGE_BRIDGES")]
    pub bridges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Maximum rows materialized per query.
    #[arg(long, env = "OTFORGE_ROW_CAP")]
    pub row_cap: Option<usize>,
    /// Per-query timeout in milliseconds.
    #[arg(long, env = "OTFORGE_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the schema graph of a database as JSON.
    Schema {
        #[command(flatten)]
        db: DbArgs,
    },
    /// Sample a batch of executable trees.
    Sample {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        limits: LimitArgs,
        /// Sampling config (JSON, or TOML by extension).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short = 'n', long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stats go to `<output>.stats.json`. Stdout when absent.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long, env = "OTFORGE_JOBS")]
        jobs: Option<usize>,
    },
    /// Compile trees to SQL, one statement per line.
    Compile {
        #[arg(short = 'i', long, default_value = "-")]
        input: PathBuf,
        #[command(flatten)]
        db: DbArgs,
        /// Schema JSON as printed by `schema`, instead of --db.
        #[arg(long, conflicts_with = "db")]
        schema: Option<PathBuf>,
    },
    /// Execute trees and print their result sets as JSON lines.
    Exec {
        #[arg(short = 'i', long, default_value = "-")]
        input: PathBuf,
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Print corpus statistics as JSON.
    Stats {
        #[arg(short = 'i', long, default_value = "-")]
        input: PathBuf,
        /// Questions, one per line.
        #[arg(long)]
        questions: Option<PathBuf>,
        #[command(flatten)]
        db: DbArgs,
        #[arg(long, env = "OTFORGE_SEGMENT_LENGTH")]
        segment_length: Option<usize>,
    },
    /// Print the hardness of each tree: id, category, raw score.
    Score {
        #[arg(short = 'i', long, default_value = "-")]
        input: PathBuf,
    },
    /// Run the annotation service.
    Serve {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, env = "OTFORGE_STORE")]
        store: Option<PathBuf>,
        #[arg(long, env = "OTFORGE_HOST")]
        host: Option<IpAddr>,
        #[arg(long, env = "OTFORGE_PORT")]
        port: Option<u16>,
        #[arg(long, env = "OTFORGE_LEASE_TTL_SECS")]
        lease_ttl_secs: Option<i64>,
        /// Skip phase 2; tasks are final after phase 1.
        #[arg(long)]
        no_token_assignment: bool,
    },
    /// Stream finished corpus records from a task store as JSON lines.
    Export {
        #[arg(long, env = "OTFORGE_STORE")]
        store: Option<PathBuf>,
        /// Only records in this phase.
        #[arg(long)]
        phase: Option<Phase>,
        /// Also write the corpus report and timing summary here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|()| out.flush().map_err(err("io")));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {}: {}", e.code, e.message.replace('\n', " "));
            1
        }
    }
}

fn required(
    value: Option<PathBuf>,
    fallback: Option<PathBuf>,
    flag: &str,
) -> Result<PathBuf, CliError> {
    value.or(fallback).ok_or_else(|| {
        CliError::new(
            "missing_argument",
            format!("--{flag} is required (flag, OTFORGE_ env or settings)"),
        )
    })
}

fn limits(args: &LimitArgs, s: &Settings) -> ExecLimits {
    let d = ExecLimits::default();
    ExecLimits {
        row_cap: args.row_cap.or(s.row_cap).unwrap_or(d.row_cap),
        timeout_ms: args.timeout_ms.or(s.timeout_ms).unwrap_or(d.timeout_ms),
    }
}

fn open_db(args: &DbArgs, s: &Settings) -> Result<(Database, SchemaGraph), CliError> {
    let path = required(args.db.clone(), s.db.clone(), "db")?;
    let db = Database::open(&path).map_err(err("database"))?;
    let mut schema = db.load_schema().map_err(err("database"))?;
    if let Some(bridges) = args.bridges.clone().or(s.bridges.clone()) {
        let overrides: BridgeOverrides = serde_json::from_str(&read_text(&bridges)?)
            .map_err(|e| CliError::new("config", format!("{}: {e}", bridges.display())))?;
        schema
            .apply_bridge_overrides(&overrides)
            .map_err(err("schema"))?;
    }
    Ok((db, schema))
}

/// Rejects trees bound to another schema or failing validation.
fn check(tree: &OperationTree, index: usize, schema: &SchemaGraph) -> Result<(), CliError> {
    if let Some(id) = &tree.schema_id {
        if *id != schema.id {
            return Err(CliError::new(
                "schema_mismatch",
                format!(
                    "tree {index} is bound to `{id}`, database is `{}`",
                    schema.id
                ),
            ));
        }
    }
    if let Some(v) = validate(tree, schema).first() {
        return Err(CliError::new("invalid_tree", format!("tree {index}: {v}")));
    }
    Ok(())
}

fn tree_label(tree: &OperationTree, index: usize) -> String {
    tree.id.clone().unwrap_or_else(|| index.to_string())
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(err("io"))?;
    writeln!(out).map_err(err("io"))
}

fn load_sample_config(path: &Path) -> Result<SampleConfig, CliError> {
    let text = read_text(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let s = Settings::load(cli.settings.as_deref())?;
    match cli.command {
        Command::Schema { db } => {
            let (_, schema) = open_db(&db, &s)?;
            write_json(out, &schema)
        }
        Command::Sample {
            db,
            limits: l,
            config,
            n,
            seed,
            output,
            jobs,
        } => {
            let mut config = match config {
                Some(p) => load_sample_config(&p)?,
                None => SampleConfig::default(),
            };
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let seed = config.seed;
            let (source, schema) = open_db(&db, &s)?;
            let limits = limits(&l, &s);
            let sampler = Sampler::new(config, &schema).map_err(err("config"))?;
            let jobs = jobs.or(s.jobs).unwrap_or(1);
            let result = if jobs > 1 {
                let path = source
                    .path()
                    .map(Path::to_path_buf)
                    .expect("opened from a file");
                sampler.sample_batch_parallel(|| Database::open(&path), n, seed, limits, jobs)
            } else {
                sampler.sample_batch(&source, n, seed, limits)
            };
            let (batch, failure) = match result {
                Ok(b) => (b, None),
                Err(BatchError::BudgetExhausted(b)) => {
                    let msg = format!(
                        "draw budget exhausted after {} attempts: {} of {} trees accepted",
                        b.stats.attempts, b.stats.accepted, b.stats.requested
                    );
                    (*b, Some(CliError::new("budget_exhausted", msg)))
                }
                Err(e) => return Err(err("database")(e)),
            };
            let trees: String = batch.trees.iter().map(|t| serialize(t) + "\n").collect();
            match output {
                Some(path) => {
                    std::fs::write(&path, trees).map_err(|e| CliError::io(&path, e))?;
                    let mut sidecar = path.clone().into_os_string();
                    sidecar.push(".stats.json");
                    let sidecar = PathBuf::from(sidecar);
                    let stats =
                        serde_json::to_string_pretty(&batch.stats).map_err(err("io"))? + "\n";
                    std::fs::write(&sidecar, stats).map_err(|e| CliError::io(&sidecar, e))?;
                }
                None => {
                    out.write_all(trees.as_bytes()).map_err(err("io"))?;
                    eprintln!(
                        "{}",
                        serde_json::to_string(&batch.stats).map_err(err("io"))?
                    );
                }
            }
            failure.map_or(Ok(()), Err)
        }
        Command::Compile { input, db, schema } => {
            let schema = match schema {
                Some(p) => serde_json::from_str::<SchemaGraph>(&read_text(&p)?)
                    .map_err(|e| CliError::new("schema", format!("{}: {e}", p.display())))?,
                None => open_db(&db, &s)?.1,
            };
            for (i, item) in read_items(&input)?.iter().enumerate() {
                check(&item.tree, i, &schema)?;
                let q = compile(&item.tree, &schema).map_err(err("compile"))?;
                writeln!(out, "{}", q.sql).map_err(err("io"))?;
            }
            Ok(())
        }
        Command::Exec {
            input,
            db,
            limits: l,
        } => {
            let (source, schema) = open_db(&db, &s)?;
            let limits = limits(&l, &s);
            for (i, item) in read_items(&input)?.iter().enumerate() {
                check(&item.tree, i, &schema)?;
                let r = execute(&item.tree, &schema, &source, limits).map_err(err("execution"))?;
                let line = serde_json::json!({
                    "id": tree_label(&item.tree, i),
                    "columns": r.columns,
                    "rows": r.rows,
                    "truncated": r.truncated,
                });
                writeln!(out, "{line}").map_err(err("io"))?;
            }
            Ok(())
        }
        Command::Stats {
            input,
            questions,
            db,
            segment_length,
        } => {
            let (_, schema) = open_db(&db, &s)?;
            let items: Vec<Item> = read_items(&input)?;
            for (i, item) in items.iter().enumerate() {
                check(&item.tree, i, &schema)?;
            }
            let tokens: Vec<Vec<String>> = match questions {
                Some(p) => read_text(&p)?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| words(&SimpleTokenizer, l))
                    .collect(),
                None => items
                    .iter()
                    .filter_map(|i| i.question_tokens.clone())
                    .collect(),
            };
            let mut options = ReportOptions::default();
            if let Some(n) = segment_length.or(s.segment_length) {
                options.segment_length = n;
            }
            let trees: Vec<OperationTree> = items.into_iter().map(|i| i.tree).collect();
            let report =
                corpus_report_with(&trees, &schema, &tokens, &options).map_err(err("analysis"))?;
            write_json(out, &report)
        }
        Command::Score { input } => {
            for (i, item) in read_items(&input)?.iter().enumerate() {
                let h = hardness(&item.tree);
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    tree_label(&item.tree, i),
                    h.category.name(),
                    h.raw_score
                )
                .map_err(err("io"))?;
            }
            Ok(())
        }
        Command::Serve {
            db,
            limits: l,
            store,
            host,
            port,
            lease_ttl_secs,
            no_token_assignment,
        } => {
            let db_path = required(db.db.clone(), s.db.clone(), "db")?;
            let store_path = required(store, s.store.clone(), "store")?;
            let source = Database::open(&db_path).map_err(err("database"))?;
            let store = Store::open(&store_path).map_err(err("store"))?;
            let defaults = ServiceConfig::default();
            let config = ServiceConfig {
                lease_ttl_secs: lease_ttl_secs
                    .or(s.lease_ttl_secs)
                    .unwrap_or(defaults.lease_ttl_secs),
                limits: limits(&l, &s),
                token_assignment: !no_token_assignment
                    && s.token_assignment.unwrap_or(defaults.token_assignment),
            };
            let service = Service::new(store, source, config)
                .map_err(|e| CliError::new(e.code(), e.to_string()))?;
            let host = host
                .or_else(|| s.host.as_deref().and_then(|h| h.parse().ok()))
                .unwrap_or(IpAddr::from([127, 0, 0, 1]));
            let addr = SocketAddr::new(host, port.or(s.port).unwrap_or(8080));
            let runtime = tokio::runtime::Runtime::new().map_err(err("io"))?;
            eprintln!("listening on http://{addr}");
            runtime
                .block_on(otforge_annotation::http::serve(Arc::new(service), addr))
                .map_err(err("io"))
        }
        Command::Export {
            store,
            phase,
            report,
        } => {
            let path = required(store, s.store.clone(), "store")?;
            if !path.is_file() {
                return Err(CliError::io(
                    &path,
                    io::Error::from(io::ErrorKind::NotFound),
                ));
            }
            let store = Store::open(&path).map_err(err("store"))?;
            let export = otforge_annotation::export(&store, phase)
                .map_err(|e| CliError::new(e.code(), e.to_string()))?;
            for r in &export.records {
                let line = serde_json::to_string(r).map_err(err("io"))?;
                writeln!(out, "{line}").map_err(err("io"))?;
            }
            if let Some(p) = report {
                let body = serde_json::json!({"report": export.report, "timing": export.timing});
                let text = serde_json::to_string_pretty(&body).map_err(err("io"))? + "\n";
                std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
            }
            Ok(())
        }
    }
}
