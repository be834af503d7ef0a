pub mod csvio;
pub mod dualspace;
pub mod error;
pub mod extrapolate;
pub mod intops;
pub mod kernels;
pub mod lattice;
pub mod maximal;
pub mod plot;
pub mod rng;
pub mod sbound;
pub mod suite;
pub mod weights;

pub use error::{Error, Result};
