//! Two-cover descent on hyperelliptic curves y² = f(x) over the rationals.
//!
//! The library computes the fake 2-Selmer set of a curve, which classifies the
//! everywhere-locally-solvable unramified two-covers of the curve up to the
//! hyperelliptic involution. An empty fake 2-Selmer set proves that the curve
//! has no rational points, even when the curve itself is everywhere locally
//! solvable. Supporting machinery includes exact rational and p-adic
//! arithmetic, local images of the x−θ map at all places, S-unit groups of
//! étale algebras, explicit quadric intersection models for the covers, and a
//! sampling harness for solvability statistics over families of genus-2
//! curves.
//!
//! Everything is exact: no floating point is used anywhere in a decision path.

pub mod exact;
pub mod orders;
pub mod padic;
pub mod local_image;
pub mod global;
pub mod descent;
pub mod covers;
pub mod solvability;
pub mod toolkit;

#[cfg(feature = "oracle")]
pub mod oracle;

pub use exact::{CurveModel, QPoly, ZPoly};
