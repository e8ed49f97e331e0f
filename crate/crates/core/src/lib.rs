//! Generates natural-language comments for Java methods.
//!
//! The pipeline pairs each method with four input channels: its token
//! stream, a flattened syntax tree, and the descriptions and definitions
//! of the catalogued APIs it calls. A parameter-similarity ranker picks
//! the APIs worth keeping, and a multi-encoder recurrent model with
//! attention turns the channels into a comment.

pub mod catalog;
pub mod corpus;
pub mod error;
pub mod java;
pub mod metrics;
pub mod neural;
pub mod ranker;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
