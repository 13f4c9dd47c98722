//! Particle simulation of grazing collisions: Boltzmann without cutoff,
//! its Landau limit, and the tools to compare the two.

pub mod appendix;
pub mod boltzmann;
pub mod cloud;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod landau;
pub mod metrics;
pub mod output;
pub mod quadrature;
pub mod rng;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use kernels::AngularKernel;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub mod overview {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub mod kernels {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    pub mod geometry {}
    #[doc = include_str!("../../../book/src/simulators.md")]
    pub mod simulators {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    pub mod coupling {}
    #[doc = include_str!("../../../book/src/verify.md")]
    pub mod verify {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
