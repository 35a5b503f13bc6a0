//! Persistence, ingestion and offline processing for interest indicators.

pub mod analysis;
pub mod config;
pub mod db;
pub mod eventlog;
pub mod ingest;
pub mod replay;
pub mod report;
pub mod synth;

pub use analysis::{analyze, Analysis, AnalysisError, PredictionRow, ALPHA};
pub use db::{Dataset, Store, StoreError};
pub use eventlog::{plan_batches, EventLog, LogError, LogRecord, PlannedSession, SessionHeader};
pub use ingest::{IngestConfig, IngestError, Ingestor};
pub use replay::{ingest_log, replay, ReplayError};
pub use report::{report_bytes, write_all, write_report, ReportKind};
