//! Unsupervised relation extraction over pre-parsed text.
//!
//! The pipeline reads dependency-parsed sentences with one marked entity
//! pair each, extracts the shortest dependency path between the two
//! entities, and trains a Bi-LSTM encoder / attention-GRU decoder to
//! predict one path of an entity pair from the pair's remaining paths. The
//! trained encoder turns every entity pair into a relation vector; these are
//! clustered with average-linkage HAC and every cluster is labeled with a
//! relation word chosen by word-vector similarity.
//!
//! Stages map onto modules:
//!
//! - [`corpus`]: JSON-lines corpus parsing, tree validation, pair grouping
//! - [`ssp`]: representative tokens and shortest dependency paths
//! - [`vocab`]: vocabularies and pretrained word vectors
//! - [`nn`]: a small reverse-mode autodiff graph with LSTM/GRU cells
//! - [`model`]: the encoder-decoder, its loss and training loop
//! - [`cluster`]: HAC, dendrogram cut, nearest-centroid assignment
//! - [`label`]: WVS and common-word cluster labeling
//! - [`eval`]: rand index and per-relation precision/recall/F1
//! - [`synth`]: planted-relation synthetic corpora
//! - [`config`], [`pipeline`]: flat run configuration and stage runner

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod label;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod ssp;
pub mod synth;
pub mod vocab;

pub use error::{Error, Result};
