//! Batch evaluation engine for patent text-embedding systems.
//!
//! Turns structured patent records and pre-computed embeddings into ranked
//! retrieval runs, fused hybrid runs, classification and clustering probe
//! scores, contrastive training-pair files and significance-tested
//! leaderboards.

pub mod ablation;
pub mod config;
pub mod corpus;
pub mod dense;
pub mod error;
pub mod fusion;
pub mod lexical;
pub mod metrics;
pub mod probes;
pub mod ranking;
pub mod recipes;
pub mod report;
pub mod stats;
pub mod synth;
pub mod tsv;

pub use error::{Error, Result};
pub use ranking::{Ranking, Run, ScoredDoc};
