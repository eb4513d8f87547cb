//! Literature-mining engine built on static word vectors.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`embstore`] turns a stream of per-occurrence subword embeddings into
//!    one averaged vector per word, dropping rare words.
//! 2. [`vocab`] pools the vectors of gene synonyms under a canonical symbol.
//! 3. [`sim`] and [`discover`] rank vocabulary entries by cosine similarity to
//!    each seed concept, fuse the per-seed rankings by average rank and drop
//!    near-duplicate names.
//! 4. [`eval`] scores candidate lists against a ground-truth target list.

pub mod discover;
pub mod embstore;
mod error;
pub mod eval;
pub mod sim;
pub mod vocab;

pub use error::{Error, ErrorKind, Result};
