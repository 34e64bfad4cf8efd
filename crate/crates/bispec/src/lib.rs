//! IO, file formats, the digit experiment and the `bispec` command line
//! tool, built on [`bispec_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod idx;
pub mod kernel;
pub mod pipeline;
pub mod transform;

pub use error::{Error, Result};
