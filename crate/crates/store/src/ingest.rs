//! Session registration and batched event ingestion.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use interest_core::event::{EventKind, RawEvent};
use interest_core::indicators::{IndicatorKind, IndicatorValue};
use interest_core::model::{
    ContentId, DeviceClass, ExplicitRating, Fragment, FragmentId, PageClass, PageId, Session, SessionId,
    TimestampMs, UserId, Webpage,
};
use rusqlite::Connection;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::db::{self, Store, StoreError};

pub const DEFAULT_BATCH_MAX: usize = 50;

pub const DEFAULT_MOBILE_MARKERS: [&str; 8] = [
    "Mobile",
    "Android",
    "iPhone",
    "iPad",
    "iPod",
    "Windows Phone",
    "Opera Mini",
    "IEMobile",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    pub batch_max: usize,
    pub auto_create_users: bool,
    pub mobile_markers: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            batch_max: DEFAULT_BATCH_MAX,
            auto_create_users: true,
            mobile_markers: DEFAULT_MOBILE_MARKERS.iter().map(|m| m.to_string()).collect(),
        }
    }
}

/// Mobile iff any marker occurs in the user agent, ignoring case.
pub fn classify_device(user_agent: &str, markers: &[String]) -> DeviceClass {
    let ua = user_agent.to_lowercase();
    if markers.iter().any(|m| !m.is_empty() && ua.contains(&m.to_lowercase())) {
        DeviceClass::Mobile
    } else {
        DeviceClass::Desktop
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub user_id: UserId,
    pub user_agent: String,
    pub page_url: String,
    /// Client-proposed id, used by replays to keep ids stable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<TimestampMs>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub session_id: SessionId,
    pub user_id: UserId,
    pub device_class: DeviceClass,
    pub started_at: TimestampMs,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentDescriptor {
    pub fragment_id: FragmentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<FragmentId>,
    #[serde(default)]
    pub dom_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_id: Option<ContentId>,
}

/// Registers a page and its fragments the first time it is seen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDescriptor {
    pub url: String,
    pub page_class: PageClass,
    #[serde(default)]
    pub fragments: Vec<FragmentDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientIndicator {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment_id: Option<FragmentId>,
    pub indicator_kind: IndicatorKind,
    pub value: f64,
}

/// Body of `POST /sessions/{id}/events`. Events stay untyped until each one
/// is checked, so a bad event can be reported by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<SessionId>,
    pub page_id: PageId,
    pub sent_at: TimestampMs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<PageDescriptor>,
    #[serde(default)]
    pub events: Vec<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indicators: Vec<ClientIndicator>,
}

/// A raw event as sent by a client: ids are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomingEvent {
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<interest_core::model::EventId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_id: Option<PageId>,
    pub client_time: TimestampMs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingBatch {
    pub ratings: Vec<ExplicitRating>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOutcome {
    /// Newly stored events; resent events are not counted.
    pub accepted: usize,
    pub received: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("missing or wrong session token")]
    InvalidToken,
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("session {0} already exists")]
    SessionConflict(SessionId),
    #[error("batch of {size} events exceeds the maximum of {max}")]
    BatchTooLarge { size: usize, max: usize },
    #[error("batch rejected: {} invalid event(s)", .0.len())]
    Invalid(Vec<EventError>),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<rusqlite::Error> for IngestError {
    fn from(e: rusqlite::Error) -> Self {
        IngestError::Store(e.into())
    }
}

pub fn now_ms() -> TimestampMs {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as TimestampMs)
}

fn random_hex(bytes: usize) -> String {
    let buf: Vec<u8> = (0..bytes).map(|_| rand::random::<u8>()).collect();
    hex::encode(buf)
}

/// Content-derived id for events sent without one.
pub fn assign_event_id(session: &SessionId, client_time: TimestampMs, kind: &EventKind) -> interest_core::model::EventId {
    let mut hasher = Sha256::new();
    hasher.update(session.as_str().as_bytes());
    hasher.update([0]);
    hasher.update(client_time.to_be_bytes());
    hasher.update([0]);
    hasher.update(serde_json::to_vec(kind).unwrap_or_default());
    let digest = hasher.finalize();
    format!("ev-{}", &hex::encode(digest)[..32]).into()
}

/// Validates and persists client traffic. Holds no state besides the store.
#[derive(Clone)]
pub struct Ingestor {
    store: Arc<Store>,
    config: IngestConfig,
}

impl Ingestor {
    pub fn new(store: Arc<Store>, config: IngestConfig) -> Self {
        Self { store, config }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn config(&self) -> &IngestConfig {
        &self.config
    }

    pub fn register_session(&self, request: &RegisterRequest) -> Result<RegisterResponse, IngestError> {
        if request.user_id.is_empty() {
            return Err(IngestError::BadRequest("user_id must not be empty".into()));
        }
        let device_class = classify_device(&request.user_agent, &self.config.mobile_markers);
        self.store.transaction(|tx| {
            if !db::user_exists(tx, &request.user_id)? {
                if !self.config.auto_create_users {
                    return Err(IngestError::UnknownUser(request.user_id.clone()));
                }
                db::insert_user(tx, &request.user_id)?;
            }
            let session_id = match &request.session_id {
                Some(id) if id.is_empty() => return Err(IngestError::BadRequest("session_id must not be empty".into())),
                Some(id) => {
                    if db::get_session(tx, id)?.is_some() {
                        return Err(IngestError::SessionConflict(id.clone()));
                    }
                    id.clone()
                }
                None => SessionId::new(format!("s-{}", random_hex(12))),
            };
            let session = Session {
                session_id: session_id.clone(),
                user_id: request.user_id.clone(),
                device_class,
                user_agent: request.user_agent.clone(),
                landing_url: request.page_url.clone(),
                started_at: request.started_at.unwrap_or_else(now_ms),
            };
            let token = random_hex(16);
            db::insert_session(tx, &session, &token)?;
            tracing::info!(session = %session_id, user = %request.user_id, device = %device_class, "session registered");
            Ok(RegisterResponse {
                session_id,
                user_id: session.user_id,
                device_class,
                started_at: session.started_at,
                token,
            })
        })
    }

    fn authorize(&self, conn: &Connection, session_id: &SessionId, token: Option<&str>) -> Result<Session, IngestError> {
        let stored = db::get_session(conn, session_id)?.ok_or_else(|| IngestError::UnknownSession(session_id.clone()))?;
        if token != Some(stored.token.as_str()) {
            return Err(IngestError::InvalidToken);
        }
        Ok(stored.session)
    }

    /// Stores a batch atomically: either every event passes validation and
    /// new ones are stored, or nothing changes.
    pub fn ingest_batch(
        &self,
        session_id: &SessionId,
        token: Option<&str>,
        batch: &EventBatch,
    ) -> Result<IngestOutcome, IngestError> {
        if batch.events.len() > self.config.batch_max {
            return Err(IngestError::BatchTooLarge {
                size: batch.events.len(),
                max: self.config.batch_max,
            });
        }
        if batch.session_id.as_ref().is_some_and(|id| id != session_id) {
            return Err(IngestError::BadRequest("batch session_id does not match the url".into()));
        }
        let received_at = now_ms();
        self.store.transaction(|tx| {
            let session = self.authorize(tx, session_id, token)?;
            if let Some(page) = &batch.page {
                register_page(tx, &batch.page_id, page)?;
            }
            let needs_page = !batch.events.is_empty() || !batch.indicators.is_empty();
            if needs_page && db::get_page(tx, &batch.page_id)?.is_none() {
                return Err(IngestError::Invalid(vec![EventError {
                    index: 0,
                    message: format!("page {} is not registered; send a page descriptor", batch.page_id),
                }]));
            }

            let mut fragment_pages: BTreeMap<FragmentId, Option<PageId>> = BTreeMap::new();
            let mut on_page = |tx: &Connection, id: &FragmentId| -> Result<bool, StoreError> {
                if !fragment_pages.contains_key(id) {
                    let page = db::get_fragment(tx, id)?.map(|f| f.page_id);
                    fragment_pages.insert(id.clone(), page);
                }
                Ok(fragment_pages[id].as_ref() == Some(&batch.page_id))
            };

            let mut errors = Vec::new();
            let mut events = Vec::with_capacity(batch.events.len());
            let mut last_time: Option<TimestampMs> = None;
            for (index, value) in batch.events.iter().enumerate() {
                let mut fail = |message: String| errors.push(EventError { index, message });
                let incoming: IncomingEvent = match serde_json::from_value(value.clone()) {
                    Ok(e) => e,
                    Err(e) => {
                        fail(format!("malformed event: {e}"));
                        continue;
                    }
                };
                if incoming.session_id.as_ref().is_some_and(|id| id != session_id) {
                    fail("event belongs to another session".into());
                }
                if incoming.page_id.as_ref().is_some_and(|id| id != &batch.page_id) {
                    fail("event belongs to another page".into());
                }
                if let Err(message) = incoming.kind.validate() {
                    fail(message);
                }
                if incoming.event_id.as_ref().is_some_and(|id| id.is_empty()) {
                    fail("event_id must not be empty".into());
                }
                for id in incoming.kind.referenced_fragments() {
                    if !on_page(tx, id)? {
                        fail(format!("fragment {id} is not registered for page {}", batch.page_id));
                    }
                }
                if last_time.is_some_and(|t| incoming.client_time < t) {
                    fail("client_time decreases within the batch".into());
                }
                last_time = Some(incoming.client_time);
                let event_id = incoming
                    .event_id
                    .clone()
                    .unwrap_or_else(|| assign_event_id(session_id, incoming.client_time, &incoming.kind));
                events.push(RawEvent {
                    kind: incoming.kind,
                    event_id,
                    session_id: session_id.clone(),
                    page_id: batch.page_id.clone(),
                    client_time: incoming.client_time,
                });
            }
            for (i, indicator) in batch.indicators.iter().enumerate() {
                let index = batch.events.len() + i;
                if !indicator.value.is_finite() || indicator.value < 0.0 {
                    errors.push(EventError {
                        index,
                        message: "indicator value must be finite and non-negative".into(),
                    });
                }
                if let Some(id) = &indicator.fragment_id {
                    if !on_page(tx, id)? {
                        errors.push(EventError {
                            index,
                            message: format!("fragment {id} is not registered for page {}", batch.page_id),
                        });
                    }
                }
            }
            if !errors.is_empty() {
                return Err(IngestError::Invalid(errors));
            }

            let mut accepted = 0;
            for event in &events {
                if db::insert_event(tx, event, received_at)? {
                    accepted += 1;
                }
            }
            for indicator in &batch.indicators {
                let value = IndicatorValue {
                    user_id: session.user_id.clone(),
                    session_id: session_id.clone(),
                    page_id: batch.page_id.clone(),
                    fragment_id: indicator.fragment_id.clone(),
                    indicator_kind: indicator.indicator_kind,
                    value: indicator.value,
                };
                db::insert_indicator_value(tx, &value, true)?;
            }
            tracing::debug!(session = %session_id, page = %batch.page_id, accepted, received = events.len(), "batch stored");
            Ok(IngestOutcome {
                accepted,
                received: events.len(),
            })
        })
    }

    /// Stores explicit ratings for the session's user; a later rating of the
    /// same content replaces the earlier one.
    pub fn submit_ratings(
        &self,
        session_id: &SessionId,
        token: Option<&str>,
        ratings: &[ExplicitRating],
    ) -> Result<usize, IngestError> {
        self.store.transaction(|tx| {
            let session = self.authorize(tx, session_id, token)?;
            let mut errors = Vec::new();
            for (index, rating) in ratings.iter().enumerate() {
                if rating.user_id != session.user_id {
                    errors.push(EventError {
                        index,
                        message: "rating belongs to another user".into(),
                    });
                }
                if let Err(e) = rating.validate() {
                    errors.push(EventError {
                        index,
                        message: e.to_string(),
                    });
                }
            }
            if !errors.is_empty() {
                return Err(IngestError::Invalid(errors));
            }
            for rating in ratings {
                db::upsert_rating(tx, rating)?;
            }
            Ok(ratings.len())
        })
    }
}

fn register_page(tx: &Connection, page_id: &PageId, page: &PageDescriptor) -> Result<(), IngestError> {
    match db::get_page(tx, page_id)? {
        Some(existing) if existing.page_class != page.page_class => {
            return Err(IngestError::BadRequest(format!(
                "page {page_id} is already registered as {}",
                existing.page_class
            )));
        }
        Some(_) => {}
        None => db::insert_page(
            tx,
            &Webpage {
                page_id: page_id.clone(),
                url: page.url.clone(),
                page_class: page.page_class,
            },
        )?,
    }
    let mut errors = Vec::new();
    for (index, descriptor) in page.fragments.iter().enumerate() {
        let fragment = Fragment {
            fragment_id: descriptor.fragment_id.clone(),
            page_id: page_id.clone(),
            parent_id: descriptor.parent_id.clone(),
            dom_path: descriptor.dom_path.clone(),
            content_id: descriptor.content_id.clone(),
        };
        match db::get_fragment(tx, &fragment.fragment_id)? {
            Some(existing) if existing == fragment => {}
            Some(_) => errors.push(EventError {
                index,
                message: format!("fragment {} is already registered differently", fragment.fragment_id),
            }),
            None => db::insert_fragment(tx, &fragment)?,
        }
    }
    // parents must resolve to fragments of the same page
    for (index, descriptor) in page.fragments.iter().enumerate() {
        if let Some(parent) = &descriptor.parent_id {
            if db::get_fragment(tx, parent)?.map(|f| f.page_id).as_ref() != Some(page_id) {
                errors.push(EventError {
                    index,
                    message: format!("parent {parent} is not a fragment of page {page_id}"),
                });
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(IngestError::Invalid(errors))
    }
}
