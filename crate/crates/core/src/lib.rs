//! Attention-based multi-hop recurrent network for multiple-choice listening
//! comprehension, with comparison baselines, a synthetic task generator and
//! attention heatmap export.

pub mod attention;
pub mod baselines;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod encoder;
pub mod error;
pub mod export;
pub mod gradcheck;
pub mod model;
pub mod optim;
pub mod synth;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod vocab;

pub use error::{Error, Result};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
