//! Multi-relational embedding models for knowledge base completion.
//!
//! Entities are rows of an embedding table, optionally passed through
//! `tanh`; each relation owns a parameter block that turns two entity
//! vectors into a plausibility score. The crate covers
//!
//! - [`data`]: triplet files, vocabularies, frequency filtering, relation
//!   categories and type constraints,
//! - [`params`]: parameter storage, initialization (random, pre-trained
//!   entity vectors, word averages) and [`checkpoint`] files,
//! - [`scoring`]: the scoring families and their gradients,
//! - [`train`]: margin ranking with negative sampling and AdaGrad,
//! - [`eval`]: link-prediction ranking, MRR, HITS@k, MAP and per-category
//!   tables,
//! - [`analysis`]: relation neighbours and embedding export.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod params;
pub mod rng;
pub mod scoring;
pub mod synthetic;
pub mod train;

pub use data::{Split, Triplet, TripletStore, Vocabulary};
pub use error::{Error, Result};
pub use params::{Hyperparams, ModelParams};
pub use scoring::{Activation, ModelKind, Side};
