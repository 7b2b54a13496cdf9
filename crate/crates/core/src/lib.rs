pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod inequality;
pub mod littlewood_paley;
pub mod operators;
pub mod random;
pub mod transform;

pub use error::{Error, Result};
pub use field::{PhysicalField, Rank, SpectralField};
pub use grid::{Grid, Wavevector};
