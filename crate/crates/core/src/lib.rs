pub mod afcore;
pub mod algebra;
pub mod cylinder;
pub mod designer;
pub mod dot;
pub mod error;
pub mod graph;
pub mod io;
pub mod ktheory;
pub mod model;
pub mod oracle;
pub mod report;
pub mod suites;
pub mod toeplitz;

pub use error::{Error, Result};
