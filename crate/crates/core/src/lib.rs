pub mod damping;
pub mod decay;
pub mod energy;
pub mod error;
pub mod export;
pub mod fitting;
pub mod numerics;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
