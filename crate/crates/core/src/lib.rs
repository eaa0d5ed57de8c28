//! Core primitives for automated fidelity assessment of strategy-training
//! rehabilitation sessions.
//!
//! The crate classifies transcript utterances as guided verbal cues, directed
//! verbal cues, or none, and carries everything around that task: transcript
//! and corpus handling, a lexicon pattern compiler with a deterministic token
//! matcher, a trainable bag-of-n-grams baseline classifier, inter-annotator
//! agreement, model-agnostic evaluation, and per-session fidelity reports.
//!
//! The crate is `no_std` (with `alloc`): everything operates on in-memory
//! strings and values. File formats are defined here as content codecs; the
//! companion CLI crate does the actual IO.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;

pub mod agreement;
pub mod baseline;
pub mod classify;
pub mod corpus;
pub mod evaluate;
pub mod lexicon;
pub mod report;
pub mod synth;
pub mod text;
pub mod transcript;

mod label;

pub use error::{Error, Result};
pub use label::{CueLabel, Discipline};
