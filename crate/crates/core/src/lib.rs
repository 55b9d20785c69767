//! Swing-phase planning, Lagrangian dynamics and dimension optimization for a
//! three-joint articulated leg (coxa, femur, tibia on root-yaw, hip-pitch and
//! knee-pitch joints).
//!
//! The pipeline is:
//!
//! 1. [`geometry`] turns hollow-rectangular segment dimensions into mass,
//!    inertia and bending stiffness.
//! 2. [`trajectory`] plans the two-phase quintic swing in joint space.
//! 3. [`dynamics`] evaluates closed-form inverse dynamics along it, and
//!    [`oracle`] cross-checks those torques by differentiating the energies.
//! 4. [`metrics`] reduces torque traces to peak torque and energy, and
//!    [`optimizer`] runs a penalty-based genetic algorithm over the nine
//!    segment dimensions.
//! 5. [`simcheck`] re-integrates the forward dynamics under the computed
//!    torques and reports joint driving power.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod metrics;
pub mod optimizer;
pub mod oracle;
pub mod report;
pub mod simcheck;
pub mod trajectory;

pub use dynamics::{DynamicsParams, JointTorques, TorqueTrace};
pub use error::{Error, Result};
pub use geometry::{LegGeometry, MaterialParams, SegmentDims, SegmentProperties};
pub use kinematics::{FootPosition, KneeConvention, LegChain};
pub use metrics::{Baseline, EnergyMode, EvaluationSetup, MetricValues};
pub use optimizer::{Candidate, DesignProblem, FitnessReport, GaConfig, GaOutcome};
pub use trajectory::{JointState, SwingProfile, Trajectory, TrajectorySample};
