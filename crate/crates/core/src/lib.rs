pub mod bench;
pub mod dist;
pub mod engine;
pub mod error;
pub mod eval;
pub mod graph;
pub mod heuristics;
pub mod ids;
pub mod io;
pub mod oracle;
pub mod par;
pub mod router;
pub mod synth;
pub mod vpath;

pub use error::{Error, Result};
