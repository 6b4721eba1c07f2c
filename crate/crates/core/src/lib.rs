//! Building blocks for studying bragging in social-media posts.
//!
//! The crate covers the non-neural half of the toolkit: corpus ingestion and
//! filtering, keyword sampling, annotation storage and agreement statistics,
//! lexicon featurizers, classification metrics, and the correlation analyses
//! used to characterise bragging language. Neural models live in
//! `braglab-models`.

pub mod analysis;
pub mod annotation;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod featurizers;
pub mod label;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use label::{BinaryLabel, BraggingLabel, Task};
