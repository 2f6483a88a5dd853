//! Synthesis of 3D on-air signatures, air-writing and gestures with the
//! Sigma-Lognormal model, plus the verification machinery used to assess
//! synthetic databases.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the file formats and the dataset
//! drivers use.

pub mod dataset;
pub mod duplicate;
pub mod error;
pub mod format;
pub mod geom;
pub mod kinematic;
pub mod model;
pub mod plan;
pub mod rng;
pub mod scalar;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
pub use geom::Vec3;
pub use scalar::Scalar;

pub type Point3 = geom::Vec3<f64>;
pub type Stroke = model::LognormalStroke<f64>;
pub type Trajectory = model::Trajectory3D<f64>;
pub type Signature = model::SigmaLogSignature<f64>;
pub type Plan = plan::ActionPlan<f64>;
pub type Arc = plan::PlanarArc<f64>;
pub type DensePath = kinematic::DensePath3D<f64>;
pub type Rendered = synthesis::Rendered<f64>;
