use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use interest_store::config::load_config;
use interest_store::ingest::{IngestConfig, Ingestor, DEFAULT_BATCH_MAX, DEFAULT_MOBILE_MARKERS};
use interest_store::synth::{synthesize, Archetype};
use interest_store::{analyze, replay, write_all, write_report, EventLog, ReportKind, Store};
use tokio::net::TcpListener;
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "interest", version, about = "Implicit interest indicators from web interaction events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP ingestion service.
    IngestServe {
        #[arg(long, env = "INTEREST_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "INTEREST_DB", default_value = "interest.db")]
        db: PathBuf,
        #[arg(long, env = "INTEREST_BATCH_MAX", default_value_t = DEFAULT_BATCH_MAX)]
        batch_max: usize,
        /// Register unknown user ids on first contact.
        #[arg(long, env = "INTEREST_AUTO_CREATE_USERS", default_value_t = true, action = clap::ArgAction::Set)]
        auto_create_users: bool,
        /// Comma-separated user-agent substrings that mark a mobile device.
        #[arg(long, env = "INTEREST_MOBILE_MARKERS", value_delimiter = ',')]
        mobile_markers: Vec<String>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
    /// Re-run ingestion and analysis over an event log and write all reports.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// TOML file with indicator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write a synthetic session log.
    Synth {
        #[arg(long)]
        archetype: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Log destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the expected indicator values as JSON lines.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Analyse a database and export one report.
    Report {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "INTEREST_DB", default_value = "interest.db")]
        db: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    if let Err(error) = run(Cli::parse()) {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestServe {
            port,
            db,
            batch_max,
            auto_create_users,
            mobile_markers,
            bind,
        } => {
            if batch_max == 0 {
                bail!("--batch-max must be positive");
            }
            let store = Store::open(&db).with_context(|| format!("opening {}", db.display()))?;
            let config = IngestConfig {
                batch_max,
                auto_create_users,
                mobile_markers: if mobile_markers.is_empty() {
                    DEFAULT_MOBILE_MARKERS.iter().map(|m| m.to_string()).collect()
                } else {
                    mobile_markers
                },
            };
            let ingestor = Ingestor::new(Arc::new(store), config);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = TcpListener::bind((bind.as_str(), port))
                    .await
                    .with_context(|| format!("binding {bind}:{port}"))?;
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                interest_server::serve(listener, ingestor, shutdown).await?;
                Ok(())
            })
        }
        Command::Replay { log, config, out_dir } => {
            let config = load_config(config.as_deref())?;
            let file = fs::File::open(&log).with_context(|| format!("opening {}", log.display()))?;
            let log = EventLog::read(BufReader::new(file)).context("reading event log")?;
            let (_, analysis) = replay(&log, &config)?;
            for path in write_all(&analysis, &out_dir)? {
                tracing::info!(path = %path.display(), "report written");
            }
            Ok(())
        }
        Command::Synth {
            archetype,
            seed,
            out,
            truth,
        } => {
            let archetype: Archetype = archetype.parse()?;
            let synthesis = synthesize(archetype, seed);
            match out {
                Some(path) => synthesis.log.write(BufWriter::new(fs::File::create(&path)?))?,
                None => synthesis.log.write(std::io::stdout().lock())?,
            }
            if let Some(path) = truth {
                let mut writer = BufWriter::new(fs::File::create(&path)?);
                for value in &synthesis.truth {
                    writeln!(writer, "{}", serde_line(value)?)?;
                }
                writer.flush()?;
            }
            Ok(())
        }
        Command::Report { kind, out, db, config } => {
            let kind: ReportKind = kind.parse()?;
            if !db.exists() {
                bail!("database {} does not exist", db.display());
            }
            let config = load_config(config.as_deref())?;
            let store = Store::open(&db)?;
            let analysis = analyze(&store.load_dataset()?, &config)?;
            store.replace_derived_values(&analysis.values)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_report(kind, &analysis, BufWriter::new(file))?;
            Ok(())
        }
    }
}

fn serde_line(value: &interest_core::indicators::IndicatorValue) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}
