//! Core of a coarsely quantized parametric speech codec.
pub mod analysis;
pub mod bitstream;
pub mod codec;
pub mod corpus;
pub mod decoder;
pub mod error;
pub use error::{Error, Result};
pub mod metrics;
pub mod quantizers;
pub mod vq;
