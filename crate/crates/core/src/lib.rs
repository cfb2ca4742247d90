pub mod analysis;
pub mod classical;
pub mod echo;
pub mod error;
pub mod numerics;
pub mod semiclassics;
pub mod spin;
pub mod states;

pub use error::{EchoError, Result};
