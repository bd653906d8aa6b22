//! Local, model-agnostic feature attributions for learning-to-rank models.

pub mod error;
pub mod features;
pub mod instance;
pub mod losses;
pub mod rankers;

pub use error::{Error, Result};
pub mod perturb;
pub mod eval;
pub mod explain;
pub mod baselines;
pub mod synth;
pub mod prune;
pub mod cli;
