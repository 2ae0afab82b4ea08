pub mod coupler;
pub mod error;
pub mod hypergraph;
pub mod robustness;
pub mod spectral;
pub mod spinsim;
pub mod walker;

pub use error::{Error, Result};
