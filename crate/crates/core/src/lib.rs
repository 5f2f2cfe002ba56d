//! Four-echelon beer game laboratory.
//!
//! The crate simulates the serial Retailer → Wholesaler → Distributor →
//! Factory supply chain, implements the anchoring-and-adjustment ordering
//! heuristic, tunes one seat of a heuristic team by bounded quasi-Newton
//! search, trains a dueling deep Q-network agent from scratch, and runs the
//! order-noise robustness sweep that compares the two agents.
//!
//! Data-parallel loops (multi-start optimization, evaluation episodes, sweep
//! repetitions) go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and plain iterators otherwise.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod neural;
pub mod optimize;
pub mod par;
pub mod policies;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};
