use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{DeviceClass, FragmentId, PageId, ParseEnumError, SessionId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    VisibilityCount,
    VisibilitySeconds,
    RandomMovement,
    MoveInFragment,
    MouseOverFragmentCount,
    MouseOverFragmentSeconds,
    HorizontalMovement,
    VerticalMovement,
    MouseOnSameYCount,
    MouseOnSameYSeconds,
    ContactInFragment,
    ContactOnSameYCount,
    SelectCount,
    CutCopyCount,
    ZoomCount,
    SwipeVisibleBefore,
    SwipeVisibleAfter,
    SwipeSkipped,
    OrientationChangeLandscape,
    OrientationChangePortrait,
}

use IndicatorKind::*;

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 20] = [
        VisibilityCount,
        VisibilitySeconds,
        RandomMovement,
        MoveInFragment,
        MouseOverFragmentCount,
        MouseOverFragmentSeconds,
        HorizontalMovement,
        VerticalMovement,
        MouseOnSameYCount,
        MouseOnSameYSeconds,
        ContactInFragment,
        ContactOnSameYCount,
        SelectCount,
        CutCopyCount,
        ZoomCount,
        SwipeVisibleBefore,
        SwipeVisibleAfter,
        SwipeSkipped,
        OrientationChangeLandscape,
        OrientationChangePortrait,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VisibilityCount => "visibility_count",
            VisibilitySeconds => "visibility_seconds",
            RandomMovement => "random_movement",
            MoveInFragment => "move_in_fragment",
            MouseOverFragmentCount => "mouse_over_fragment_count",
            MouseOverFragmentSeconds => "mouse_over_fragment_seconds",
            HorizontalMovement => "horizontal_movement",
            VerticalMovement => "vertical_movement",
            MouseOnSameYCount => "mouse_on_same_y_count",
            MouseOnSameYSeconds => "mouse_on_same_y_seconds",
            ContactInFragment => "contact_in_fragment",
            ContactOnSameYCount => "contact_on_same_y_count",
            SelectCount => "select_count",
            CutCopyCount => "cut_copy_count",
            ZoomCount => "zoom_count",
            SwipeVisibleBefore => "swipe_visible_before",
            SwipeVisibleAfter => "swipe_visible_after",
            SwipeSkipped => "swipe_skipped",
            OrientationChangeLandscape => "orientation_change_landscape",
            OrientationChangePortrait => "orientation_change_portrait",
        }
    }

    /// Duration kinds are tallied in milliseconds and reported in seconds.
    pub fn is_duration(self) -> bool {
        matches!(
            self,
            VisibilitySeconds | MouseOverFragmentSeconds | MouseOnSameYSeconds
        )
    }

    /// Device support per indicator: pointer-driven kinds are desktop only,
    /// touch gestures and touch same-line marking are mobile only.
    pub fn supports(self, device: DeviceClass) -> bool {
        let desktop_only = matches!(
            self,
            RandomMovement
                | MoveInFragment
                | MouseOverFragmentCount
                | MouseOverFragmentSeconds
                | HorizontalMovement
                | VerticalMovement
                | MouseOnSameYCount
                | MouseOnSameYSeconds
        );
        let mobile_only = matches!(
            self,
            ContactOnSameYCount
                | SwipeVisibleBefore
                | SwipeVisibleAfter
                | SwipeSkipped
                | OrientationChangeLandscape
                | OrientationChangePortrait
        );
        match device {
            DeviceClass::Desktop => !mobile_only,
            DeviceClass::Mobile => !desktop_only,
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ParseEnumError::new("indicator kind", s))
    }
}

/// One derived indicator for a fragment; `fragment_id` is `None` for
/// page-level records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValue {
    pub user_id: UserId,
    pub session_id: SessionId,
    pub page_id: PageId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment_id: Option<FragmentId>,
    pub indicator_kind: IndicatorKind,
    pub value: f64,
}

impl IndicatorValue {
    /// Ordering key used for reports and multiset comparisons.
    pub fn sort_key(&self) -> (&UserId, &SessionId, &PageId, Option<&FragmentId>, IndicatorKind) {
        (
            &self.user_id,
            &self.session_id,
            &self.page_id,
            self.fragment_id.as_ref(),
            self.indicator_kind,
        )
    }
}

/// Integer amounts per (fragment, kind): counts, or milliseconds for duration
/// kinds. Keys present were touched by a derivation even if the amount is 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    amounts: BTreeMap<(FragmentId, IndicatorKind), i64>,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, fragment: &FragmentId, kind: IndicatorKind, amount: i64) {
        *self.amounts.entry((fragment.clone(), kind)).or_insert(0) += amount;
    }

    pub fn get(&self, fragment: &FragmentId, kind: IndicatorKind) -> Option<i64> {
        self.amounts.get(&(fragment.clone(), kind)).copied()
    }

    pub fn merge(&mut self, other: Tally) {
        for ((fragment, kind), amount) in other.amounts {
            *self.amounts.entry((fragment, kind)).or_insert(0) += amount;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FragmentId, IndicatorKind, i64)> {
        self.amounts.iter().map(|((f, k), a)| (f, *k, *a))
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&FragmentId, IndicatorKind) -> bool) {
        self.amounts.retain(|(f, k), _| keep(f, *k));
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.amounts.len()
    }

    pub fn kinds(&self) -> impl Iterator<Item = IndicatorKind> + '_ {
        self.amounts.keys().map(|(_, k)| *k)
    }

    /// Converts amounts to reported values: counts as-is, milliseconds as
    /// seconds.
    pub fn into_values(self, user: &UserId, session: &SessionId, page: &PageId) -> Vec<IndicatorValue> {
        self.amounts
            .into_iter()
            .map(|((fragment, kind), amount)| IndicatorValue {
                user_id: user.clone(),
                session_id: session.clone(),
                page_id: page.clone(),
                fragment_id: Some(fragment),
                indicator_kind: kind,
                value: amount_to_value(kind, amount),
            })
            .collect()
    }
}

pub fn amount_to_value(kind: IndicatorKind, amount: i64) -> f64 {
    if kind.is_duration() {
        amount as f64 / 1000.0
    } else {
        amount as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in IndicatorKind::ALL {
            assert_eq!(kind.as_str().parse::<IndicatorKind>().unwrap(), kind);
            assert_eq!(serde_json::to_value(kind).unwrap(), kind.as_str());
        }
        assert!("visibility".parse::<IndicatorKind>().is_err());
    }

    #[test]
    fn device_columns() {
        let desktop: Vec<_> = IndicatorKind::ALL
            .into_iter()
            .filter(|k| k.supports(DeviceClass::Desktop))
            .collect();
        let mobile: Vec<_> = IndicatorKind::ALL
            .into_iter()
            .filter(|k| k.supports(DeviceClass::Mobile))
            .collect();
        assert_eq!(desktop.len(), 14);
        assert_eq!(mobile.len(), 12);
        assert!(mobile.contains(&ContactOnSameYCount));
        assert!(!desktop.contains(&SwipeSkipped));
        assert!(!mobile.contains(&MouseOnSameYSeconds));
    }

    #[test]
    fn durations_convert_to_seconds() {
        assert_eq!(amount_to_value(VisibilitySeconds, 1234), 1.234);
        assert_eq!(amount_to_value(VisibilityCount, 3), 3.0);
    }
}
