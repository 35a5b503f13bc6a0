//! SQLite persistence for users, sessions, pages, fragments, events,
//! indicator values and ratings.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use interest_core::event::{EventKind, RawEvent};
use interest_core::indicators::{IndicatorKind, IndicatorValue};
use interest_core::model::{
    ContentId, ExplicitRating, Fragment, FragmentId, Likert, PageId, Session, SessionId, UserId, Webpage,
};
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use thiserror::Error;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    device_class TEXT NOT NULL,
    user_agent TEXT NOT NULL,
    landing_url TEXT NOT NULL,
    started_at INTEGER NOT NULL,
    token TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS webpages (
    page_id TEXT PRIMARY KEY,
    url TEXT NOT NULL,
    page_class TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS fragments (
    fragment_id TEXT PRIMARY KEY,
    page_id TEXT NOT NULL REFERENCES webpages(page_id),
    parent_id TEXT REFERENCES fragments(fragment_id) DEFERRABLE INITIALLY DEFERRED,
    dom_path TEXT NOT NULL,
    content_id TEXT
);
CREATE TABLE IF NOT EXISTS events (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    event_id TEXT NOT NULL UNIQUE,
    session_id TEXT NOT NULL REFERENCES sessions(session_id) ON DELETE CASCADE,
    page_id TEXT NOT NULL REFERENCES webpages(page_id),
    client_time INTEGER NOT NULL,
    event_type TEXT NOT NULL,
    payload TEXT NOT NULL,
    received_at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS events_by_timeline ON events(session_id, page_id, client_time, seq);
CREATE TABLE IF NOT EXISTS indicator_values (
    user_id TEXT NOT NULL REFERENCES users(user_id),
    session_id TEXT NOT NULL REFERENCES sessions(session_id) ON DELETE CASCADE,
    page_id TEXT NOT NULL REFERENCES webpages(page_id),
    fragment_id TEXT REFERENCES fragments(fragment_id),
    indicator_kind TEXT NOT NULL,
    value REAL NOT NULL,
    advisory INTEGER NOT NULL
);
CREATE UNIQUE INDEX IF NOT EXISTS indicator_values_key
    ON indicator_values(session_id, page_id, IFNULL(fragment_id, ''), indicator_kind, advisory);
CREATE TABLE IF NOT EXISTS ratings (
    user_id TEXT NOT NULL REFERENCES users(user_id),
    content_id TEXT NOT NULL,
    noticed INTEGER NOT NULL,
    likert INTEGER,
    PRIMARY KEY (user_id, content_id)
);
";

pub const TABLES: [&str; 7] = [
    "users",
    "sessions",
    "webpages",
    "fragments",
    "events",
    "indicator_values",
    "ratings",
];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Sqlite(#[from] rusqlite::Error),
    #[error("corrupt row: {0}")]
    Corrupt(String),
}

/// A session together with the bearer token issued for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredSession {
    pub session: Session,
    pub token: String,
}

/// Everything analysis needs, read in one snapshot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub sessions: BTreeMap<SessionId, Session>,
    pub pages: BTreeMap<PageId, Webpage>,
    pub fragments: Vec<Fragment>,
    /// Events per (session, page) in client_time order, arrival order on ties.
    pub timelines: BTreeMap<(SessionId, PageId), Vec<RawEvent>>,
    pub ratings: Vec<ExplicitRating>,
}

pub struct Store {
    conn: Mutex<Connection>,
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        Self::init(Connection::open(path)?)
    }

    pub fn open_in_memory() -> Result<Self, StoreError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, StoreError> {
        conn.pragma_update(None, "foreign_keys", true)?;
        conn.busy_timeout(std::time::Duration::from_secs(5))?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self {
            conn: Mutex::new(conn),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Connection> {
        // a panic while holding the lock leaves sqlite itself consistent
        self.conn.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Runs `f` in a transaction that commits only when it returns `Ok`.
    pub fn transaction<T, E>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let mut conn = self.lock();
        let tx = conn.transaction().map_err(StoreError::from)?;
        let value = f(&tx)?;
        tx.commit().map_err(StoreError::from)?;
        Ok(value)
    }

    pub fn session(&self, id: &SessionId) -> Result<Option<StoredSession>, StoreError> {
        get_session(&self.lock(), id)
    }

    /// Deletes a session; its events and indicator values go with it.
    pub fn delete_session(&self, id: &SessionId) -> Result<bool, StoreError> {
        Ok(self
            .lock()
            .execute("DELETE FROM sessions WHERE session_id = ?1", [id.as_str()])?
            > 0)
    }

    pub fn table_counts(&self) -> Result<BTreeMap<&'static str, i64>, StoreError> {
        let conn = self.lock();
        TABLES
            .iter()
            .map(|table| {
                let n: i64 = conn.query_row(&format!("SELECT COUNT(*) FROM {table}"), [], |row| row.get(0))?;
                Ok((*table, n))
            })
            .collect()
    }

    /// Rows that break a reference; empty in a consistent store.
    pub fn integrity_violations(&self) -> Result<Vec<String>, StoreError> {
        let conn = self.lock();
        let mut stmt = conn.prepare("PRAGMA foreign_key_check")?;
        let rows = stmt.query_map([], |row| {
            let table: String = row.get(0)?;
            let rowid: Option<i64> = row.get(1)?;
            let parent: String = row.get(2)?;
            Ok(format!("{table} row {rowid:?} -> {parent}"))
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    pub fn load_dataset(&self) -> Result<Dataset, StoreError> {
        let conn = self.lock();
        let mut dataset = Dataset::default();

        let mut stmt = conn.prepare(
            "SELECT session_id, user_id, device_class, user_agent, landing_url, started_at FROM sessions ORDER BY session_id",
        )?;
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            let session = session_from_row(row)?;
            dataset.sessions.insert(session.session_id.clone(), session);
        }

        let mut stmt = conn.prepare("SELECT page_id, url, page_class FROM webpages ORDER BY page_id")?;
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            let page = Webpage {
                page_id: PageId::new(row.get::<_, String>(0)?),
                url: row.get(1)?,
                page_class: parse_enum(&row.get::<_, String>(2)?)?,
            };
            dataset.pages.insert(page.page_id.clone(), page);
        }

        let mut stmt = conn.prepare(
            "SELECT fragment_id, page_id, parent_id, dom_path, content_id FROM fragments ORDER BY fragment_id",
        )?;
        let rows = stmt.query_map([], |row| {
            Ok(Fragment {
                fragment_id: FragmentId::new(row.get::<_, String>(0)?),
                page_id: PageId::new(row.get::<_, String>(1)?),
                parent_id: row.get::<_, Option<String>>(2)?.map(FragmentId::new),
                dom_path: row.get(3)?,
                content_id: row.get::<_, Option<String>>(4)?.map(ContentId::new),
            })
        })?;
        dataset.fragments = rows.collect::<Result<_, _>>()?;

        let mut stmt = conn.prepare(
            "SELECT event_id, session_id, page_id, client_time, payload FROM events
             ORDER BY session_id, page_id, client_time, seq",
        )?;
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            let payload: String = row.get(4)?;
            let kind: EventKind = serde_json::from_str(&payload).map_err(|e| StoreError::Corrupt(e.to_string()))?;
            let event = RawEvent {
                kind,
                event_id: row.get::<_, String>(0)?.into(),
                session_id: row.get::<_, String>(1)?.into(),
                page_id: row.get::<_, String>(2)?.into(),
                client_time: row.get(3)?,
            };
            dataset
                .timelines
                .entry((event.session_id.clone(), event.page_id.clone()))
                .or_default()
                .push(event);
        }

        let mut stmt = conn.prepare("SELECT user_id, content_id, noticed, likert FROM ratings ORDER BY user_id, content_id")?;
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            let likert = row
                .get::<_, Option<i64>>(3)?
                .map(Likert::new)
                .transpose()
                .map_err(|e| StoreError::Corrupt(e.to_string()))?;
            dataset.ratings.push(ExplicitRating {
                user_id: row.get::<_, String>(0)?.into(),
                content_id: row.get::<_, String>(1)?.into(),
                noticed: row.get(2)?,
                likert,
            });
        }
        Ok(dataset)
    }

    /// Replaces all server-derived indicator values; advisory client values
    /// are kept.
    pub fn replace_derived_values(&self, values: &[IndicatorValue]) -> Result<(), StoreError> {
        self.transaction(|tx| {
            tx.execute("DELETE FROM indicator_values WHERE advisory = 0", [])?;
            for value in values {
                insert_indicator_value(tx, value, false)?;
            }
            Ok::<_, StoreError>(())
        })
    }

    pub fn indicator_values(&self, advisory: bool) -> Result<Vec<IndicatorValue>, StoreError> {
        let conn = self.lock();
        let mut stmt = conn.prepare(
            "SELECT user_id, session_id, page_id, fragment_id, indicator_kind, value FROM indicator_values
             WHERE advisory = ?1 ORDER BY session_id, page_id, fragment_id, indicator_kind",
        )?;
        let mut rows = stmt.query([advisory])?;
        let mut values = Vec::new();
        while let Some(row) = rows.next()? {
            values.push(IndicatorValue {
                user_id: row.get::<_, String>(0)?.into(),
                session_id: row.get::<_, String>(1)?.into(),
                page_id: row.get::<_, String>(2)?.into(),
                fragment_id: row.get::<_, Option<String>>(3)?.map(FragmentId::new),
                indicator_kind: parse_enum::<IndicatorKind>(&row.get::<_, String>(4)?)?,
                value: row.get(5)?,
            });
        }
        Ok(values)
    }
}

fn parse_enum<T: std::str::FromStr>(s: &str) -> Result<T, StoreError> {
    s.parse().map_err(|_| StoreError::Corrupt(format!("unexpected value {s:?}")))
}

fn session_from_row(row: &rusqlite::Row<'_>) -> Result<Session, StoreError> {
    Ok(Session {
        session_id: row.get::<_, String>(0)?.into(),
        user_id: row.get::<_, String>(1)?.into(),
        device_class: parse_enum(&row.get::<_, String>(2)?)?,
        user_agent: row.get(3)?,
        landing_url: row.get(4)?,
        started_at: row.get(5)?,
    })
}

pub fn user_exists(conn: &Connection, user: &UserId) -> Result<bool, StoreError> {
    Ok(conn
        .query_row("SELECT 1 FROM users WHERE user_id = ?1", [user.as_str()], |_| Ok(()))
        .optional()?
        .is_some())
}

pub fn insert_user(conn: &Connection, user: &UserId) -> Result<(), StoreError> {
    conn.execute("INSERT OR IGNORE INTO users (user_id) VALUES (?1)", [user.as_str()])?;
    Ok(())
}

pub fn insert_session(conn: &Connection, session: &Session, token: &str) -> Result<(), StoreError> {
    conn.execute(
        "INSERT INTO sessions (session_id, user_id, device_class, user_agent, landing_url, started_at, token)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
        params![
            session.session_id.as_str(),
            session.user_id.as_str(),
            session.device_class.as_str(),
            session.user_agent,
            session.landing_url,
            session.started_at,
            token
        ],
    )?;
    Ok(())
}

pub fn get_session(conn: &Connection, id: &SessionId) -> Result<Option<StoredSession>, StoreError> {
    let mut stmt = conn.prepare(
        "SELECT session_id, user_id, device_class, user_agent, landing_url, started_at, token
         FROM sessions WHERE session_id = ?1",
    )?;
    let mut rows = stmt.query([id.as_str()])?;
    let Some(row) = rows.next()? else {
        return Ok(None);
    };
    Ok(Some(StoredSession {
        session: session_from_row(row)?,
        token: row.get(6)?,
    }))
}

pub fn get_page(conn: &Connection, id: &PageId) -> Result<Option<Webpage>, StoreError> {
    let row = conn
        .query_row(
            "SELECT url, page_class FROM webpages WHERE page_id = ?1",
            [id.as_str()],
            |row| Ok((row.get::<_, String>(0)?, row.get::<_, String>(1)?)),
        )
        .optional()?;
    row.map(|(url, class)| {
        Ok(Webpage {
            page_id: id.clone(),
            url,
            page_class: parse_enum(&class)?,
        })
    })
    .transpose()
}

pub fn insert_page(conn: &Connection, page: &Webpage) -> Result<(), StoreError> {
    conn.execute(
        "INSERT INTO webpages (page_id, url, page_class) VALUES (?1, ?2, ?3)",
        params![page.page_id.as_str(), page.url, page.page_class.as_str()],
    )?;
    Ok(())
}

pub fn get_fragment(conn: &Connection, id: &FragmentId) -> Result<Option<Fragment>, StoreError> {
    Ok(conn
        .query_row(
            "SELECT page_id, parent_id, dom_path, content_id FROM fragments WHERE fragment_id = ?1",
            [id.as_str()],
            |row| {
                Ok(Fragment {
                    fragment_id: id.clone(),
                    page_id: row.get::<_, String>(0)?.into(),
                    parent_id: row.get::<_, Option<String>>(1)?.map(FragmentId::new),
                    dom_path: row.get(2)?,
                    content_id: row.get::<_, Option<String>>(3)?.map(ContentId::new),
                })
            },
        )
        .optional()?)
}

pub fn insert_fragment(conn: &Connection, fragment: &Fragment) -> Result<(), StoreError> {
    conn.execute(
        "INSERT INTO fragments (fragment_id, page_id, parent_id, dom_path, content_id) VALUES (?1, ?2, ?3, ?4, ?5)",
        params![
            fragment.fragment_id.as_str(),
            fragment.page_id.as_str(),
            fragment.parent_id.as_ref().map(|p| p.as_str()),
            fragment.dom_path,
            fragment.content_id.as_ref().map(|c| c.as_str()),
        ],
    )?;
    Ok(())
}

/// Returns false when an event with the same id is already stored.
pub fn insert_event(conn: &Connection, event: &RawEvent, received_at: i64) -> Result<bool, StoreError> {
    let payload = serde_json::to_string(&event.kind).map_err(|e| StoreError::Corrupt(e.to_string()))?;
    let inserted = conn.execute(
        "INSERT OR IGNORE INTO events (event_id, session_id, page_id, client_time, event_type, payload, received_at)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
        params![
            event.event_id.as_str(),
            event.session_id.as_str(),
            event.page_id.as_str(),
            event.client_time,
            event.kind.type_name(),
            payload,
            received_at
        ],
    )?;
    Ok(inserted > 0)
}

pub fn insert_indicator_value(conn: &Connection, value: &IndicatorValue, advisory: bool) -> Result<(), StoreError> {
    conn.execute(
        "INSERT OR REPLACE INTO indicator_values
         (user_id, session_id, page_id, fragment_id, indicator_kind, value, advisory)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
        params![
            value.user_id.as_str(),
            value.session_id.as_str(),
            value.page_id.as_str(),
            value.fragment_id.as_ref().map(|f| f.as_str()),
            value.indicator_kind.as_str(),
            value.value,
            advisory
        ],
    )?;
    Ok(())
}

pub fn upsert_rating(conn: &Connection, rating: &ExplicitRating) -> Result<(), StoreError> {
    conn.execute(
        "INSERT OR REPLACE INTO ratings (user_id, content_id, noticed, likert) VALUES (?1, ?2, ?3, ?4)",
        params![
            rating.user_id.as_str(),
            rating.content_id.as_str(),
            rating.noticed,
            rating.likert.map(i64::from)
        ],
    )?;
    Ok(())
}
