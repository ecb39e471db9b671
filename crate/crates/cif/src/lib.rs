//! File formats, datasets, checkpoints and the command-line workflow for
//! [`cif_core`].

pub mod checkpoint;
pub mod cli;
pub mod cloud_io;
pub mod dataset;
mod error;
mod fsutil;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
pub use fsutil::write_atomic;
