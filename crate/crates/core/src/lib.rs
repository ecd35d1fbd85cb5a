//! Geo-located tweet mining toolkit: NDJSON ingestion, bounding-box city
//! filtering, tweet-aware text preprocessing, LDA topic discovery, word and
//! document embeddings, travel-related classification with leave-one-group-out
//! evaluation, exploratory aggregation, and seeded synthetic corpora with
//! ground-truth ledgers for end-to-end verification.

pub mod aggregate;
pub mod classify;
pub mod container;
pub mod features;
pub mod geo;
pub mod ingest;
pub mod rng;
pub mod synth;
pub mod textprep;
pub mod topics;

pub use geo::{GeoBox, GeoPoint, PlaceTag};
pub use ingest::{IngestStats, TweetRecord};
pub use rng::SplitMix64;
pub use textprep::{Lang, PipelineConfig, PreprocessedDoc};
