//! Numerical machinery for continuous, rotation- and dot-product-invariant
//! valuations on Lipschitz functions on the unit sphere `S^{n-1}`.
//!
//! The crate is organised around a small set of interlocking pieces:
//!
//! - [`sphere_core`]: points, tangent vectors, rotations and quadrature rules
//!   on the sphere, plus spherical gradients (analytic and finite-difference).
//! - [`lip_functions`]: an algebra of scalar fields on the sphere closed under
//!   max/min/sum/scale/rotation, Lipschitz-constant estimation, McShane and
//!   1-homogeneous extensions, mollification, and convergence reporting.
//! - [`convex_bodies`]: convex bodies driven entirely through their support
//!   functions, with argmax witnesses, Minkowski arithmetic, Hausdorff
//!   distance and metric projection onto polyhedral cones.
//! - [`piecewise_linear`]: simplicial cone fans over the boundary of a
//!   hypercube, piecewise linear fields, interpolation of smooth fields, and
//!   the constructive decomposition of PL fields into minima of support
//!   functions.
//! - [`valuations`]: the representation-formula functional
//!   `c0 + c1 ∫ u + c2 ∫ [(n-1)u² − ‖∇u‖²]`, general integrand valuations,
//!   intrinsic volumes with a Steiner-fit Monte Carlo oracle, invariance
//!   checks, and the Vandermonde homogeneous decomposition.
//! - [`counterexample`]: the divergence experiment showing that a valuation
//!   agreeing with the k-th intrinsic volume (k ≥ 3) on support functions
//!   blows up along a sequence of fields that converges to zero.
//! - [`io`]: JSON/CSV schemas and self-describing run reports for the CLI.

pub mod convex_bodies;
pub mod counterexample;
mod error;
pub mod io;
pub mod lip_functions;
mod linalg;
pub mod parallel;
pub mod piecewise_linear;
pub mod sphere_core;
pub mod valuations;

pub use error::{Error, Result};
