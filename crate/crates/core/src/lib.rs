//! Location and disaster entity extraction from earthquake tweets.
//!
//! The pipeline runs in stages: a GeoNames [`gazetteer`], tweet
//! [`preprocess`]ing, training-data synthesis in [`dataset`], a trainable
//! averaged-perceptron [`tagger`], token-level [`evaluate`], and geocoded
//! severity maps in [`severity`]. The [`cli`] module wires the stages
//! together behind the `quakener` binary.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod gazetteer;
pub mod preprocess;
pub mod severity;
pub mod tagger;
pub mod text;

pub use error::{Error, Result};
