//! Problem files, seeded generators, a dense reference solver and batch
//! tooling around the `exactpen` solvers.

pub mod batch;
pub mod error;
pub mod generators;
pub mod io;
pub mod oracle;
pub mod output;
pub mod solvers;

pub use error::{BenchError, Result};
