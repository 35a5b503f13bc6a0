use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{IndicatorConfig, Tally};
use crate::event::FragmentRects;
use crate::model::{Fragment, FragmentId, PageId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForestError {
    #[error("fragment {0} is listed twice")]
    Duplicate(FragmentId),
    #[error("fragment {child} names unknown parent {parent}")]
    UnknownParent { child: FragmentId, parent: FragmentId },
    #[error("fragment {child} and its parent {parent} are on different pages")]
    CrossPage { child: FragmentId, parent: FragmentId },
    #[error("parent links form a cycle through fragment {0}")]
    Cycle(FragmentId),
}

/// Parent links between the fragments of a page.
#[derive(Debug, Clone, Default)]
pub struct FragmentForest {
    fragments: BTreeMap<FragmentId, Fragment>,
    depth: HashMap<FragmentId, usize>,
}

impl FragmentForest {
    pub fn new(fragments: impl IntoIterator<Item = Fragment>) -> Result<Self, ForestError> {
        let mut map = BTreeMap::new();
        for fragment in fragments {
            let id = fragment.fragment_id.clone();
            if map.insert(id.clone(), fragment).is_some() {
                return Err(ForestError::Duplicate(id));
            }
        }
        for fragment in map.values() {
            if let Some(parent_id) = &fragment.parent_id {
                let parent = map.get(parent_id).ok_or_else(|| ForestError::UnknownParent {
                    child: fragment.fragment_id.clone(),
                    parent: parent_id.clone(),
                })?;
                if parent.page_id != fragment.page_id {
                    return Err(ForestError::CrossPage {
                        child: fragment.fragment_id.clone(),
                        parent: parent_id.clone(),
                    });
                }
            }
        }
        let mut depth = HashMap::with_capacity(map.len());
        for id in map.keys() {
            let mut steps = 0;
            let mut cursor = map[id].parent_id.as_ref();
            while let Some(parent) = cursor {
                steps += 1;
                if steps > map.len() {
                    return Err(ForestError::Cycle(id.clone()));
                }
                cursor = map[parent].parent_id.as_ref();
            }
            depth.insert(id.clone(), steps);
        }
        Ok(Self {
            fragments: map,
            depth,
        })
    }

    pub fn get(&self, id: &FragmentId) -> Option<&Fragment> {
        self.fragments.get(id)
    }

    pub fn fragments(&self) -> impl Iterator<Item = &Fragment> {
        self.fragments.values()
    }

    pub fn on_page<'a>(&'a self, page: &'a PageId) -> impl Iterator<Item = &'a Fragment> + 'a {
        self.fragments.values().filter(move |f| &f.page_id == page)
    }

    /// Depth in the forest; fragments unknown to the forest count as roots.
    pub fn depth(&self, id: &FragmentId) -> usize {
        self.depth.get(id).copied().unwrap_or(0)
    }

    /// Parent, grandparent, ... up to the root.
    pub fn ancestors<'a>(&'a self, id: &FragmentId) -> impl Iterator<Item = &'a FragmentId> + 'a {
        let mut cursor = self.fragments.get(id).and_then(|f| f.parent_id.as_ref());
        std::iter::from_fn(move || {
            let current = cursor?;
            cursor = self.fragments.get(current).and_then(|f| f.parent_id.as_ref());
            Some(current)
        })
    }

    /// The most deeply nested fragment whose rect contains the point; ties go
    /// to the smaller area, then the smaller id.
    pub fn innermost_at<'a>(&self, rects: &'a FragmentRects, x: f64, y: f64) -> Option<&'a FragmentId> {
        rects
            .iter()
            .filter(|(_, rect)| rect.contains_point(x, y))
            .min_by(|(a_id, a), (b_id, b)| {
                self.depth(b_id)
                    .cmp(&self.depth(a_id))
                    .then(a.area().total_cmp(&b.area()))
                    .then(a_id.cmp(b_id))
            })
            .map(|(id, _)| id)
    }
}

/// Adds every fragment's amounts to all of its ancestors. Amounts are taken
/// from the input, so each ancestor gains exactly the sum over its
/// descendants.
pub fn propagate_to_ancestors(tally: &Tally, forest: &FragmentForest, config: &IndicatorConfig) -> Tally {
    let mut out = tally.clone();
    if !config.propagate_to_ancestors {
        return out;
    }
    for (fragment, kind, amount) in tally.iter() {
        for ancestor in forest.ancestors(fragment) {
            out.add(ancestor, kind, amount);
        }
    }
    out
}
