//! Part-level clustering pipeline for detecting coordinated influence
//! campaigns in labeled text corpora.
//!
//! Documents are split into parts (sentences, whole documents, or belief
//! target spans), embedded, and clustered under many configurations. Clusters
//! dominated by campaign documents train a cluster classifier; at inference
//! the predicted high-influence clusters from all configurations are pooled
//! and projected back onto documents.

pub mod classify;
pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod seed;
pub mod synthgen;
pub mod text;

pub use error::{Error, Result};
