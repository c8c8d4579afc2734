//! Numerical laboratory for branching Brownian motion whose branching rate
//! is a periodic function `g`.
//!
//! The crate computes the directional front speed `c*(e)` from a periodic
//! principal-eigenvalue problem, the associated large-deviation rate
//! function, the Wulff shape of `c*`, and checks all of them against Monte
//! Carlo simulation of the particle system, a tilted diffusion and a 1-D
//! Fisher-KPP solver.

pub mod error;
pub mod exec;
pub mod env;
pub mod spectral;
pub mod speed;
pub mod geometry;
pub mod wulff;
pub mod stats;
pub mod bbm;
pub mod tilted;
pub mod fkpp;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
