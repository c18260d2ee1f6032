//! Max-entropy TSP rounding on graphic k-donuts.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod lp;
pub mod matching;
pub mod maxent_oracle;
pub mod sampler;
pub mod tours;

pub use error::{Error, Result};
