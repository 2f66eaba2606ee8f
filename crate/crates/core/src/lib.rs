//! Identification of gravity and direction-dependent cable disturbance
//! torques of a serial manipulator from static joint-torque data, plus the
//! matching gravity compensation controller and a simulated plant to
//! validate both.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod cli;
pub mod disturbance;
pub mod error;
pub mod estimation;
pub mod excitation;
pub mod files;
pub mod gcc;
pub mod gravity;
pub mod kinematics;
pub mod linalg;
pub mod metrics;
pub mod plant;

pub use disturbance::{DirectionTag, DisturbanceBasis, PolyDisturbance};
pub use error::{Error, Result};
pub use estimation::{Dataset, DatasetMeta, Method, ParamSet, Sample};
pub use gcc::{Compensator, GccConfig};
pub use gravity::{GravityConstants, GravityRegressorSpec, LinkMass, LinkMassParams};
pub use kinematics::KinematicModel;
pub use plant::{Plant, PlantSpec};
