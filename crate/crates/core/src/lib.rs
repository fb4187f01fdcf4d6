//! Sparse LQR synthesis and denial-of-service countermeasures for networked
//! LTI systems.
//!
//! The pipeline is:
//!
//! 1. [`sparse`]: sweep the sparsity weight β over a weighted block-ℓ1
//!    penalized H2 problem and record which feedback blocks vanish when.
//! 2. [`prioritization`]: turn the vanish order into a priority table.
//! 3. [`rerouting`]: given attacked links, sacrifice lower-priority links to
//!    carry the attacked data, or drop it.
//! 4. [`structured`]: resynthesize the H2-optimal gain on the post-attack
//!    pattern with an augmented Lagrangian method.
//!
//! Numerical code is generic over [`Real`] (`f32`/`f64`); the aliases below
//! fix `f64`.

// `!(x > 0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descent;
pub mod error;
pub mod lti;
pub mod prioritization;
pub mod render;
pub mod rerouting;
pub mod scalar;
pub mod scenario;
pub mod sparse;
pub mod structured;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Plant = lti::LtiPlant<f64>;
pub type Gain = lti::GainMatrix<f64>;
pub type Cost = lti::Cost<f64>;
