//! Sentiment scoring for short social-network texts with an LSTM+CNN network,
//! plus time-windowed, volume-weighted ranking of cryptocurrency tokens.
//!
//! The crate is organised bottom-up:
//!
//! * [`textprep`] cleans raw text, builds vocabularies and encodes fixed-length
//!   index sequences.
//! * [`nncore`] is a small dense numeric kernel (layers, losses, Adam and a
//!   finite-difference gradient checker).
//! * [`model`] assembles the network, trains it and persists checkpoints.
//! * [`data`] loads labelled corpora, [`eval`] turns scores into classes and
//!   metrics, and [`rank`] implements the comment-volume weighted ranking.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod nncore;
pub mod rank;
pub mod textprep;

pub use error::{Result, SocError};
