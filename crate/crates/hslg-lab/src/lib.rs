pub mod cli;
pub mod environment;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod gibbs;
pub mod lattice;
pub mod lgrw;
pub mod multilayer;
pub mod polymer;
pub mod rng;
pub mod special_fn;
pub mod stats;
pub mod umap;
pub mod verify;

pub use error::{Error, Result};
