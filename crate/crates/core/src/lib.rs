//! Implicit interest indicators derived from browser interaction events, and
//! the per-user model that turns them into interest predictions.

pub mod event;
pub mod indicators;
pub mod model;
pub mod stats;
pub mod timeline;
