//! Numerics for noninvertible hyperbolic maps.
//!
//! The crate works with a closed zoo of endomorphisms of the flat torus and the
//! Riemann sphere. It builds finite truncations of backward branches, estimates
//! stable and unstable splittings along them, tests membership in local stable
//! and unstable manifolds, and approximates basic sets on box grids.

pub mod error;
pub mod geometry;
pub mod hyperbolic;
pub mod localmanifolds;
pub mod models;
pub mod natural_extension;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{distance, norm, wrap, Manifold, Point, TangentVector};
pub use models::{Endomorphism, JacobianMatrix, Model};
pub use natural_extension::{BackwardBranch, PreimageTree};
