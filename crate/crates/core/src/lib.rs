//! Group-supervised learning toolkit.
//!
//! Pipeline: procedurally generate an attributed letter-image dataset, build
//! the sample multigraph over shared attributes, train a swap-disentangled
//! auto-encoder on groups of related samples, and evaluate zero-shot synthesis
//! against exact ground truth.

pub mod autodiff;
pub mod error;
pub mod fonts;
pub mod gsl;
pub mod nn;
pub mod schema;

pub use autodiff::{Tape, Tensor};
pub use error::{Error, Result};
