//! Line-delimited JSON event logs and their translation into ingestion calls.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use interest_core::model::{ExplicitRating, Fragment, PageId, SessionId, TimestampMs, UserId, Webpage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EventBatch, FragmentDescriptor, IncomingEvent, PageDescriptor, RegisterRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: SessionId,
    pub user_id: UserId,
    pub user_agent: String,
    pub landing_url: String,
    pub started_at: TimestampMs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum HeaderRecord {
    Session(SessionHeader),
    Page(Webpage),
    Fragment(Fragment),
    Rating(ExplicitRating),
}

const HEADER_TYPES: [&str; 4] = ["session", "page", "fragment", "rating"];

#[derive(Debug, Clone, PartialEq)]
pub enum LogRecord {
    Session(SessionHeader),
    Page(Webpage),
    Fragment(Fragment),
    Rating(ExplicitRating),
    Event(IncomingEvent),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Plan(String),
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        let header = match self {
            LogRecord::Event(event) => return serde_json::to_string(event).expect("events serialize"),
            LogRecord::Session(h) => HeaderRecord::Session(h.clone()),
            LogRecord::Page(p) => HeaderRecord::Page(p.clone()),
            LogRecord::Fragment(f) => HeaderRecord::Fragment(f.clone()),
            LogRecord::Rating(r) => HeaderRecord::Rating(r.clone()),
        };
        serde_json::to_string(&header).expect("headers serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let kind = value
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or("record has no string `type` field")?;
        if HEADER_TYPES.contains(&kind) {
            let header: HeaderRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
            Ok(match header {
                HeaderRecord::Session(h) => LogRecord::Session(h),
                HeaderRecord::Page(p) => LogRecord::Page(p),
                HeaderRecord::Fragment(f) => LogRecord::Fragment(f),
                HeaderRecord::Rating(r) => LogRecord::Rating(r),
            })
        } else {
            serde_json::from_value(value).map(LogRecord::Event).map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<LogRecord>,
}

impl EventLog {
    /// Parses and checks that headers come before what they scope. Blank
    /// lines are skipped; line numbers in errors are 1-based.
    pub fn read(reader: impl BufRead) -> Result<Self, LogError> {
        let mut records = Vec::new();
        let mut sessions: BTreeSet<SessionId> = BTreeSet::new();
        let mut users: BTreeSet<UserId> = BTreeSet::new();
        let mut pages: BTreeSet<PageId> = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fail = |message: String| LogError::Parse { line: line_no, message };
            let record = LogRecord::from_line(&line).map_err(fail)?;
            match &record {
                LogRecord::Session(h) => {
                    if !sessions.insert(h.session_id.clone()) {
                        return Err(fail(format!("session {} declared twice", h.session_id)));
                    }
                    users.insert(h.user_id.clone());
                }
                LogRecord::Page(p) => {
                    pages.insert(p.page_id.clone());
                }
                LogRecord::Fragment(f) => {
                    if !pages.contains(&f.page_id) {
                        return Err(fail(format!("fragment {} before its page {}", f.fragment_id, f.page_id)));
                    }
                }
                LogRecord::Rating(r) => {
                    if !users.contains(&r.user_id) {
                        return Err(fail(format!("rating by {} before any of their sessions", r.user_id)));
                    }
                    r.validate().map_err(|e| fail(e.to_string()))?;
                }
                LogRecord::Event(e) => {
                    let Some(session) = &e.session_id else {
                        return Err(fail("event without session_id".into()));
                    };
                    let Some(page) = &e.page_id else {
                        return Err(fail("event without page_id".into()));
                    };
                    if !sessions.contains(session) {
                        return Err(fail(format!("event before the header of session {session}")));
                    }
                    if !pages.contains(page) {
                        return Err(fail(format!("event before the header of page {page}")));
                    }
                }
            }
            records.push(record);
        }
        Ok(Self { records })
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        Self::read(text.as_bytes())
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for record in &self.records {
            writeln!(out, "{}", record.to_line())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn extend(&mut self, other: EventLog) {
        self.records.extend(other.records);
    }
}

/// The ingestion calls that reproduce one logged session.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSession {
    pub register: RegisterRequest,
    pub batches: Vec<EventBatch>,
    pub ratings: Vec<ExplicitRating>,
}

/// Groups logged events by session and page, orders each group by
/// client_time (log order on ties) and cuts it into batches of at most
/// `batch_max`. The first batch of each group carries the page descriptor.
/// Ratings travel with the user's first session.
pub fn plan_batches(log: &EventLog, batch_max: usize) -> Result<Vec<PlannedSession>, LogError> {
    if batch_max == 0 {
        return Err(LogError::Plan("batch size must be positive".into()));
    }
    let mut headers: Vec<SessionHeader> = Vec::new();
    let mut pages: BTreeMap<PageId, Webpage> = BTreeMap::new();
    let mut fragments: BTreeMap<PageId, Vec<Fragment>> = BTreeMap::new();
    let mut ratings: BTreeMap<UserId, Vec<ExplicitRating>> = BTreeMap::new();
    let mut groups: BTreeMap<SessionId, Vec<(PageId, Vec<IncomingEvent>)>> = BTreeMap::new();
    for record in &log.records {
        match record {
            LogRecord::Session(h) => headers.push(h.clone()),
            LogRecord::Page(p) => {
                pages.insert(p.page_id.clone(), p.clone());
            }
            LogRecord::Fragment(f) => fragments.entry(f.page_id.clone()).or_default().push(f.clone()),
            LogRecord::Rating(r) => ratings.entry(r.user_id.clone()).or_default().push(r.clone()),
            LogRecord::Event(e) => {
                let (Some(session), Some(page)) = (&e.session_id, &e.page_id) else {
                    return Err(LogError::Plan("logged event lacks session or page".into()));
                };
                let per_page = groups.entry(session.clone()).or_default();
                match per_page.iter_mut().find(|(p, _)| p == page) {
                    Some((_, events)) => events.push(e.clone()),
                    None => per_page.push((page.clone(), vec![e.clone()])),
                }
            }
        }
    }

    let mut planned = Vec::new();
    for header in headers {
        let mut batches = Vec::new();
        for (page_id, mut events) in groups.remove(&header.session_id).unwrap_or_default() {
            events.sort_by_key(|e| e.client_time);
            let page = pages
                .get(&page_id)
                .ok_or_else(|| LogError::Plan(format!("page {page_id} has no header")))?;
            let descriptor = PageDescriptor {
                url: page.url.clone(),
                page_class: page.page_class,
                fragments: fragments
                    .get(&page_id)
                    .into_iter()
                    .flatten()
                    .map(|f| FragmentDescriptor {
                        fragment_id: f.fragment_id.clone(),
                        parent_id: f.parent_id.clone(),
                        dom_path: f.dom_path.clone(),
                        content_id: f.content_id.clone(),
                    })
                    .collect(),
            };
            for (i, chunk) in events.chunks(batch_max).enumerate() {
                batches.push(EventBatch {
                    session_id: Some(header.session_id.clone()),
                    page_id: page_id.clone(),
                    sent_at: chunk.last().map_or(0, |e| e.client_time),
                    page: (i == 0).then(|| descriptor.clone()),
                    events: chunk
                        .iter()
                        .map(|e| serde_json::to_value(e).expect("events serialize"))
                        .collect(),
                    indicators: Vec::new(),
                });
            }
        }
        planned.push(PlannedSession {
            register: RegisterRequest {
                user_id: header.user_id.clone(),
                user_agent: header.user_agent.clone(),
                page_url: header.landing_url.clone(),
                session_id: Some(header.session_id.clone()),
                started_at: Some(header.started_at),
            },
            batches,
            ratings: ratings.remove(&header.user_id).unwrap_or_default(),
        });
    }
    Ok(planned)
}
