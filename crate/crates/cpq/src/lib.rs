//! Reference oracles, Gmsh mesh input and the `cpq` command-line driver on
//! top of `cpq-core`.

mod error;

pub mod cli;
pub mod mesh_io;
pub mod oracle;
pub mod parallel;
pub mod reference;

pub use error::{Error, Result};
