//! Offline replay of an event log through the ingestion path.

use std::sync::Arc;

use interest_core::indicators::IndicatorConfig;
use thiserror::Error;

use crate::analysis::{analyze, Analysis, AnalysisError};
use crate::db::{Store, StoreError};
use crate::eventlog::{plan_batches, EventLog, LogError};
use crate::ingest::{IngestConfig, IngestError, Ingestor};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("session {session}: {source}")]
    Ingest { session: String, source: IngestError },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Feeds every planned session into `ingestor` exactly as an HTTP client
/// would.
pub fn ingest_log(ingestor: &Ingestor, log: &EventLog) -> Result<(), ReplayError> {
    for planned in plan_batches(log, ingestor.config().batch_max)? {
        let fail = |source| ReplayError::Ingest {
            session: planned.register.session_id.as_ref().map(ToString::to_string).unwrap_or_default(),
            source,
        };
        let registered = ingestor.register_session(&planned.register).map_err(fail)?;
        for batch in &planned.batches {
            ingestor
                .ingest_batch(&registered.session_id, Some(&registered.token), batch)
                .map_err(fail)?;
        }
        if !planned.ratings.is_empty() {
            ingestor
                .submit_ratings(&registered.session_id, Some(&registered.token), &planned.ratings)
                .map_err(fail)?;
        }
    }
    Ok(())
}

/// Replays into a fresh in-memory store and analyses the result.
pub fn replay(log: &EventLog, config: &IndicatorConfig) -> Result<(Arc<Store>, Analysis), ReplayError> {
    let store = Arc::new(Store::open_in_memory()?);
    let ingestor = Ingestor::new(
        store.clone(),
        IngestConfig {
            auto_create_users: true,
            ..IngestConfig::default()
        },
    );
    ingest_log(&ingestor, log)?;
    let analysis = analyze(&store.load_dataset()?, config)?;
    store.replace_derived_values(&analysis.values)?;
    Ok((store, analysis))
}
