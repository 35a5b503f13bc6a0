//! Domain types shared across the engine: identifiers, the entity graph
//! (users, sessions, pages, fragments), page geometry and rating scales.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds since the Unix epoch, as reported by the client.
pub type TimestampMs = i64;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                Self(id.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(id: String) -> Self {
                Self(id)
            }
        }
    };
}

string_id!(UserId);
string_id!(SessionId);
string_id!(PageId);
string_id!(FragmentId);
string_id!(EventId);
string_id!(
    /// Identifies a piece of content (an article) independently of the pages
    /// and fragments that present it.
    ContentId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    Desktop,
    Mobile,
}

impl DeviceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceClass::Desktop => "desktop",
            DeviceClass::Mobile => "mobile",
        }
    }
}

impl fmt::Display for DeviceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceClass {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desktop" => Ok(DeviceClass::Desktop),
            "mobile" => Ok(DeviceClass::Mobile),
            other => Err(ParseEnumError::new("device class", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageClass {
    Overview,
    Detail,
}

impl PageClass {
    pub const ALL: [PageClass; 2] = [PageClass::Overview, PageClass::Detail];

    pub fn as_str(self) -> &'static str {
        match self {
            PageClass::Overview => "overview",
            PageClass::Detail => "detail",
        }
    }
}

impl fmt::Display for PageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PageClass {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overview" => Ok(PageClass::Overview),
            "detail" => Ok(PageClass::Detail),
            other => Err(ParseEnumError::new("page class", other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what}: {value:?}")]
pub struct ParseEnumError {
    what: &'static str,
    value: String,
}

impl ParseEnumError {
    pub fn new(what: &'static str, value: &str) -> Self {
        Self {
            what,
            value: value.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub user_id: UserId,
}

/// One interaction of a user with the site through a specific browser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: SessionId,
    pub user_id: UserId,
    pub device_class: DeviceClass,
    pub user_agent: String,
    pub landing_url: String,
    pub started_at: TimestampMs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Webpage {
    pub page_id: PageId,
    pub url: String,
    pub page_class: PageClass,
}

/// A tracked region of a page.
///
/// `content_id` tags the fragment as presenting a content item: the teaser on
/// an overview page or the article container on a detail page. Per-content
/// values are read from the outermost tagged fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub fragment_id: FragmentId,
    pub page_id: PageId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<FragmentId>,
    #[serde(default)]
    pub dom_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_id: Option<ContentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitRating {
    pub user_id: UserId,
    pub content_id: ContentId,
    pub noticed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likert: Option<Likert>,
}

impl ExplicitRating {
    pub fn validate(&self) -> Result<(), ModelError> {
        match (self.noticed, self.likert) {
            (false, Some(_)) => Err(ModelError::RatingWithoutNotice),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("likert value {0} outside 1..=7")]
    LikertOutOfRange(i64),
    #[error("fragment has zero area")]
    DegenerateFragment,
    #[error("a likert value is only allowed for noticed content")]
    RatingWithoutNotice,
}

/// Axis-aligned rectangle in page coordinates (CSS px).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Finite coordinates and non-negative extents.
    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.width, self.height]
            .iter()
            .all(|v| v.is_finite())
            && self.width >= 0.0
            && self.height >= 0.0
    }

    /// Closed-interval intersection; rects that only touch yield a zero-area
    /// rect, disjoint rects yield `None`.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let left = self.x.max(other.x);
        let top = self.y.max(other.y);
        let right = self.right().min(other.right());
        let bottom = self.bottom().min(other.bottom());
        if right < left || bottom < top {
            return None;
        }
        // keep a rect's own extent when it bounds both sides, so containment is exact
        let width = if left == self.x && right == self.right() {
            self.width
        } else if left == other.x && right == other.right() {
            other.width
        } else {
            right - left
        };
        let height = if top == self.y && bottom == self.bottom() {
            self.height
        } else if top == other.y && bottom == other.bottom() {
            other.height
        } else {
            bottom - top
        };
        Some(Rect::new(left, top, width, height))
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        self.intersection(other).map_or(0.0, |r| r.area())
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x && x <= self.right() && y >= self.y && y <= self.bottom()
    }

    pub fn spans_y(&self, y: f64) -> bool {
        y >= self.y && y <= self.bottom()
    }
}

pub fn rect_intersection(a: &Rect, b: &Rect) -> Option<Rect> {
    a.intersection(b)
}

/// Share of the fragment's area that lies inside the viewport.
pub fn visibility_fraction(fragment: &Rect, viewport: &Rect) -> Result<f64, ModelError> {
    let area = fragment.area();
    if area <= 0.0 {
        return Err(ModelError::DegenerateFragment);
    }
    Ok((fragment.intersection_area(viewport) / area).clamp(0.0, 1.0))
}

/// A rating on the seven-point scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Likert(u8);

impl Likert {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 7;

    pub fn new(value: i64) -> Result<Self, ModelError> {
        if (i64::from(Self::MIN)..=i64::from(Self::MAX)).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(ModelError::LikertOutOfRange(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn to_unit(self) -> f64 {
        f64::from(self.0 - Self::MIN) / f64::from(Self::MAX - Self::MIN)
    }
}

impl TryFrom<i64> for Likert {
    type Error = ModelError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Likert::new(value)
    }
}

impl From<Likert> for i64 {
    fn from(value: Likert) -> Self {
        i64::from(value.0)
    }
}

impl fmt::Display for Likert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Maps a seven-point rating onto [0, 1]: 1 -> 0, 7 -> 1.
pub fn likert_to_unit(likert: i64) -> Result<f64, ModelError> {
    Likert::new(likert).map(Likert::to_unit)
}

/// Two-decimal presentation used by reports.
pub fn present_2dp(value: f64) -> String {
    format!("{value:.2}")
}
