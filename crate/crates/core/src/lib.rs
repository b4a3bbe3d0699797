//! Analysis of articulated-body motion sequences for physical plausibility
//! and dynamic stability.
//!
//! The crate takes motion sequences (mesh vertices, joints, 6d rotations,
//! root translation per frame), derives full-body dynamics (center of mass,
//! inertia force, zero-moment point, center of pressure, base of support),
//! and exposes them three ways:
//!
//! - differentiable loss terms (ground penetration, floating, foot slide,
//!   dynamic stability, cycle-consistency geometry) with forward-mode
//!   gradients verified against finite differences,
//! - evaluation metrics (Penetrate, Float, Skate, Dyn. Stability, BoS Dist)
//!   with corpus aggregation and table rendering,
//! - a data-processing pipeline (resampling, support filtering,
//!   canonicalization, mirroring, grounding).
//!
//! Everything is plain SI internally (m, s, kg, rad); reports convert to
//! cm / % at the boundary.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grad;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod num;
pub mod pipeline;
pub mod rotations;
pub mod synth;
pub mod types;

pub(crate) mod lift;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use types::{
    AnalysisConfig, BodyMesh, GroundPlane, LossWeights, MetricsReport, MotionFrame,
    MotionSequence, OracleTraces,
};
