//! Radial polyharmonic Lane-Emden systems on the unit ball.
//!
//! ```text
//! (-Δ)^α u = |v|^q,  (-Δ)^β v = |u|^p  in B_1 ⊂ R^N,
//! ∂^r u/∂ν^r = 0 (r < α),  ∂^r v/∂ν^r = 0 (r < β)  on ∂B_1.
//! ```

pub mod capacity;
pub mod classify;
pub mod continuation;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod radial;
pub mod shooting;
pub mod uniqueness;

pub use error::{Error, Result};
pub use grid::{ChainState, RadialFunction, RadialGrid, RadialProfile};
pub use params::{ChainSystem, Forcing, ProblemParams};
