//! Command-line front end for the `hpslpred` pipeline.
//!
//! Exit codes: 0 on success, 2 on validation errors (bad arguments, invalid
//! config), 1 on runtime failures.

pub mod http_source;
pub mod service;

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use hpslpred::bundle::load_bundle;
use hpslpred::config::PipelineConfig;
use hpslpred::dataset::uniprot::{FixtureSource, PageSource, DEFAULT_ENDPOINT};
use hpslpred::pipeline::{self, Stage};
use hpslpred::synthetic::{write_synthetic, SyntheticParams};
use hpslpred::Error;

use crate::http_source::HttpSource;
use crate::service::AppState;

/// Environment variable naming the UniProt page cache directory.
pub const CACHE_ENV: &str = "HPSLPRED_CACHE";

#[derive(Debug, Parser)]
#[command(name = "hpslpred", version, about = "Multi-label protein subcellular localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for stage files.
    #[arg(long, default_value = "hpslpred-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Read UniProt pages from a fixture directory instead of the network.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download the configured UniProt query.
    Fetch {
        #[command(flatten)]
        stage: StageArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Ingest sequences and labels, then extract features.
    Extract(StageArgs),
    /// Boundary under-sampling per label.
    Balance(StageArgs),
    /// MRMD feature ranking.
    Select(StageArgs),
    /// Two-layer dimension search.
    Search(StageArgs),
    /// Train the per-label champion ensemble and write the bundle.
    Train(StageArgs),
    /// Evaluate the bundle on the hold-out samples.
    Evaluate(StageArgs),
    /// Run every stage.
    Run {
        #[command(flatten)]
        stage: StageArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Predict localizations for a FASTA file; prints JSON.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        /// FASTA input; `-` reads stdin.
        #[arg(long)]
        input: PathBuf,
    },
    /// Serve predictions over HTTP.
    Serve {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Write a planted-label synthetic dataset and a matching config.
    GenerateSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 600)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        labels: usize,
    },
}

fn load_config(args: &StageArgs) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn page_source(cfg: &PipelineConfig, args: &SourceArgs) -> Result<Option<Box<dyn PageSource>>, Error> {
    if cfg.data.uniprot.is_none() {
        return Ok(None);
    }
    if let Some(dir) = &args.fixtures {
        return Ok(Some(Box::new(FixtureSource::new(dir))));
    }
    let endpoint = cfg.data.uniprot.as_ref().map_or(DEFAULT_ENDPOINT, |u| u.endpoint.as_str());
    Ok(Some(Box::new(HttpSource::new(endpoint)?)))
}

fn stage(args: &StageArgs, stages: &[Stage]) -> Result<(), Error> {
    let cfg = load_config(args)?;
    for &s in stages {
        pipeline::run_stage(&cfg, &args.out, s, None, None)?;
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<String, Error> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| Error::io("<stdin>", e))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }
}

pub fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fetch { stage: args, source } => {
            let cfg = load_config(&args)?;
            let src = page_source(&cfg, &source)?
                .ok_or_else(|| Error::Format("fetch needs a [data.uniprot] section in the config".into()))?;
            let cache = cache_dir();
            pipeline::run_stage(&cfg, &args.out, Stage::Fetch, Some(src.as_ref()), cache.as_deref())
        }
        Command::Extract(a) => stage(&a, &[Stage::Ingest, Stage::Extract]),
        Command::Balance(a) => stage(&a, &[Stage::Balance]),
        Command::Select(a) => stage(&a, &[Stage::Select]),
        Command::Search(a) => stage(&a, &[Stage::Search]),
        Command::Train(a) => stage(&a, &[Stage::Train]),
        Command::Evaluate(a) => stage(&a, &[Stage::Evaluate]),
        Command::Run { stage: args, source } => {
            let cfg = load_config(&args)?;
            let src = page_source(&cfg, &source)?;
            let cache = cache_dir();
            let report = pipeline::run(&cfg, &args.out, src.as_deref(), cache.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Command::Predict { bundle, input } => {
            let (_, model) = load_bundle(&bundle)?;
            let preds = pipeline::predict_fasta(&model, &read_input(&input)?)?;
            println!("{}", serde_json::to_string_pretty(&preds).expect("predictions serialize"));
            Ok(())
        }
        Command::Serve { bundle, addr } => {
            let (manifest, model) = load_bundle(&bundle)?;
            let state = Arc::new(AppState { model, manifest });
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Format(format!("tokio runtime: {e}")))?;
            rt.block_on(service::serve(state, addr)).map_err(|e| Error::io(addr.to_string(), e))
        }
        Command::GenerateSynthetic { out, seed, samples, labels } => {
            if !(1..=hpslpred::synthetic::LABEL_NAMES.len()).contains(&labels) || samples == 0 {
                return Err(Error::Config(hpslpred::config::ConfigError::Invalid(format!(
                    "need 1..={} labels and at least one sample",
                    hpslpred::synthetic::LABEL_NAMES.len()
                ))));
            }
            let params = SyntheticParams { samples, labels, ..Default::default() };
            let files = write_synthetic(&out, &params, seed).map_err(|e| Error::io(&out, e))?;
            println!("{}", files.config.display());
            Ok(())
        }
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let mut msg = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !msg.contains(&text) {
                    msg.push_str(": ");
                    msg.push_str(&text);
                }
                source = s.source();
            }
            eprintln!("error: {msg}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}
