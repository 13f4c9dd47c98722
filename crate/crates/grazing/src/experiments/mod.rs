//! Coupled Boltzmann/Landau runs, time subdivisions and rate sweeps.

mod coupling;
mod subdivision;
mod sweep;

pub use coupling::*;
pub use subdivision::*;
pub use sweep::*;
