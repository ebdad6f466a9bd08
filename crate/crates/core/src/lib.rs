pub mod analyzer;
pub mod error;
pub mod graph;
pub mod io;
pub mod lti;
pub mod simulator;

pub use error::{Error, Result};
