//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nestgraph_core::decomposition::{score_extraction, ExtractionBackend, ExtractionScores, FixtureBackend, Metrics, TripleSet};

use crate::bundle::Store;
use crate::http::{serve, AppState};
use crate::pipeline::{ingest, IngestConfig};
use crate::remote::RemoteBackend;
use crate::svg::export_svg;

#[derive(Debug, Parser)]
#[command(name = "nestgraph", version, about = "Nested entity-relationship graphs for progressive reading")]
pub struct Cli {
    /// Directory holding document bundles.
    #[arg(long, global = true, env = "NESTGRAPH_DATA_DIR", default_value = "nestgraph-data")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a text file (or stdin with `-`) and print the document id.
    Ingest {
        input: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print a document's timeline as JSON.
    Timeline { id: String },
    /// Print a document's entity ranking as JSON.
    Entities { id: String },
    /// Write the SVG snapshot after the first `k` sentences.
    Svg {
        id: String,
        #[arg(long)]
        prefix: usize,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "NESTGRAPH_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score predicted triples against gold triples.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendMode {
    Fixture,
    Remote,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "fixture")]
    pub backend: BackendMode,
    /// Directory of recorded responses for the fixture backend.
    #[arg(long, env = "NESTGRAPH_FIXTURES", default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/climate"))]
    pub fixtures: PathBuf,
    #[arg(long, env = "NESTGRAPH_BACKEND_URL")]
    pub backend_url: Option<String>,
    #[arg(long, env = "NESTGRAPH_BACKEND_KEY", hide_env_values = true)]
    pub backend_key: Option<String>,
    /// Per-request timeout of the remote backend, in seconds.
    #[arg(long, default_value_t = 120)]
    pub backend_timeout: u64,
}

/// Overrides for individual configuration fields.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub ideal_link_length: Option<f64>,
    #[arg(long)]
    pub link_stiffness: Option<f64>,
    #[arg(long)]
    pub inclusion_strength: Option<f64>,
    #[arg(long)]
    pub exclusion_strength: Option<f64>,
    #[arg(long)]
    pub sentence_strength: Option<f64>,
    #[arg(long)]
    pub overlap_strength: Option<f64>,
    #[arg(long)]
    pub overlap_clearance: Option<f64>,
    #[arg(long)]
    pub grid_interval: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub stabilize_epsilon: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub composite_padding: Option<f64>,
    #[arg(long)]
    pub column_width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_content_tokens: Option<usize>,
    #[arg(long)]
    pub max_repair_rounds: Option<usize>,
}

impl ConfigArgs {
    pub fn apply(&self, mut c: IngestConfig) -> IngestConfig {
        fn set<T: Copy>(field: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *field = v;
            }
        }
        let l = &mut c.layout;
        set(&mut l.ideal_link_length, self.ideal_link_length);
        set(&mut l.link_stiffness, self.link_stiffness);
        set(&mut l.inclusion_strength, self.inclusion_strength);
        set(&mut l.exclusion_strength, self.exclusion_strength);
        set(&mut l.sentence_strength, self.sentence_strength);
        set(&mut l.overlap_strength, self.overlap_strength);
        set(&mut l.overlap_clearance, self.overlap_clearance);
        set(&mut l.grid_interval, self.grid_interval);
        set(&mut l.damping, self.damping);
        set(&mut l.stabilize_epsilon, self.stabilize_epsilon);
        set(&mut l.max_iterations, self.max_iterations);
        set(&mut l.composite_padding, self.composite_padding);
        set(&mut l.column_width, self.column_width);
        set(&mut l.seed, self.seed);
        set(&mut c.complexity.min_content_tokens, self.min_content_tokens);
        set(&mut c.max_repair_rounds, self.max_repair_rounds);
        c
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(pub String);

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError(e.to_string())
}

impl BackendArgs {
    pub fn build(&self) -> Result<Arc<dyn ExtractionBackend>, CliError> {
        match self.backend {
            BackendMode::Fixture => Ok(Arc::new(FixtureBackend::from_dir(&self.fixtures).map_err(fail)?)),
            BackendMode::Remote => {
                let url = self
                    .backend_url
                    .clone()
                    .ok_or_else(|| CliError("--backend remote needs --backend-url or NESTGRAPH_BACKEND_URL".into()))?;
                Ok(Arc::new(RemoteBackend::new(
                    url,
                    self.backend_key.clone(),
                    Duration::from_secs(self.backend_timeout),
                )))
            }
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).map_err(fail)?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<Vec<TripleSet>, CliError> {
    let json = read_input(path)?;
    serde_json::from_str(&json).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn score_row(out: &mut String, name: &str, m: &Metrics) {
    let (p, r, f1) = m.display_percentages();
    let _ = writeln!(
        out,
        "{name:<10} {:>6} {:>10} {:>8} {p:>6} {r:>6} {f1:>6}",
        m.total_gold, m.total_extracted, m.correct
    );
}

/// Table of counts and percentages, one row per item kind.
pub fn format_scores(scores: &ExtractionScores) -> String {
    let mut out = format!(
        "{:<10} {:>6} {:>10} {:>8} {:>6} {:>6} {:>6}\n",
        "", "gold", "extracted", "correct", "P", "R", "F1"
    );
    score_row(&mut out, "entities", &scores.entities);
    score_row(&mut out, "relations", &scores.relations);
    out
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialization cannot fail");
    s.push('\n');
    s
}

/// Runs one command and returns what it prints on stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Ingest { input, backend, config } => {
            let text = read_input(&input)?;
            let backend = backend.build()?;
            let bundle = ingest(&text, &config.apply(IngestConfig::default()), backend.as_ref()).map_err(fail)?;
            Store::open(&cli.data_dir).map_err(fail)?.save(&bundle).map_err(fail)?;
            Ok(format!("{}\n", bundle.id))
        }
        Command::Timeline { id } => {
            let bundle = Store::open(&cli.data_dir).map_err(fail)?.load(&id).map_err(fail)?;
            Ok(pretty(&bundle.timeline))
        }
        Command::Entities { id } => {
            let bundle = Store::open(&cli.data_dir).map_err(fail)?.load(&id).map_err(fail)?;
            Ok(pretty(&bundle.entities))
        }
        Command::Svg { id, prefix, output } => {
            let bundle = Store::open(&cli.data_dir).map_err(fail)?.load(&id).map_err(fail)?;
            let svg = export_svg(&bundle, prefix).map_err(fail)?;
            match output {
                Some(path) => {
                    fs::write(&path, svg).map_err(fail)?;
                    Ok(String::new())
                }
                None => Ok(svg),
            }
        }
        Command::Serve { addr, backend, config } => {
            let store = Store::open(&cli.data_dir).map_err(fail)?;
            let state = AppState::new(store, backend.build()?, config.apply(IngestConfig::default()));
            let runtime = tokio::runtime::Runtime::new().map_err(fail)?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.map_err(fail)?;
                eprintln!("listening on http://{}", listener.local_addr().map_err(fail)?);
                serve(listener, state).await.map_err(fail)
            })?;
            Ok(String::new())
        }
        Command::Score { gold, pred } => {
            let scores = score_extraction(&read_corpus(&pred)?, &read_corpus(&gold)?).map_err(fail)?;
            Ok(format_scores(&scores))
        }
    }
}
