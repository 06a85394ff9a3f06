//! Per-state maps over a geolocated blog corpus.
//!
//! The pipeline runs `ingest` (profiles and HTML posts to tokens) into an
//! [`index::CorpusIndex`], from which [`analytics`] derives per-state word,
//! category and demographic maps, [`stats`] rank-correlates them, and
//! [`choropleth`] bins them for display.

pub mod analytics;
pub mod choropleth;
pub mod index;
pub mod ingest;
pub mod lexicon;
pub mod pipeline;
pub mod states;
pub mod stats;

pub use states::{StateId, StateVector, STATE_COUNT};
