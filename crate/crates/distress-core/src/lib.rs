//! Corporate default prediction toolkit.
//!
//! The crate is organized around a firm-year [`panel::Panel`]: predictor
//! construction fills it ([`features`], [`text`]), eight native algorithms
//! score it ([`model`]), a walk-forward harness evaluates them ([`eval`]),
//! and the downstream analyses ([`insight`], [`market`]) quantify what the
//! forecasts are worth.
//!
//! Everything is deterministic given explicit seeds: training, permutation
//! importance, and the synthetic panel generator all derive their randomness
//! from caller-supplied seeds, and parallel reductions run in fixed order so
//! results do not depend on the worker count.

pub mod error;
pub mod eval;
pub mod features;
pub mod insight;
pub mod market;
pub mod model;
pub mod panel;
pub mod text;

pub use error::{Error, Result};
