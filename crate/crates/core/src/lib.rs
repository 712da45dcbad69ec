//! Relevance routing of collaborative-work events to project roles.
//!
//! Events and role histories are projected onto a registry of context
//! factors weighted by inverse event frequency; event-role relevance is the
//! cosine between the two vectors. A static 0-1 interest baseline and
//! set-based evaluation against manual labels are included.

pub mod cli;
pub mod context;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod jsonl;
pub mod relevance;
pub mod vectorize;

pub use error::{Error, Result};
