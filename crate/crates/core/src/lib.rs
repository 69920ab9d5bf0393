//! Closed-loop simulation engine for a team of pursuer agents that
//! concurrently tracks and radio-jams a maneuvering aerial target.
//!
//! The crate is organized around the per-step pipeline of the engine:
//!
//! * [`dynamics`] — discrete double-integrator-with-drag state-space models
//!   shared by the target and the agents.
//! * [`geometry`] — convex half-space machinery: cuboid obstacles and the
//!   regular-dodecahedron inner approximation of the spherical sensing
//!   volume.
//! * [`sensing`] — range/azimuth/inclination radar model, in-range
//!   detection-and-jamming indicator, and the measurement likelihood.
//! * [`estimation`] — per-agent particle filters, closed-form horizon
//!   prediction, and sequential covariance-intersection fusion.
//! * [`miqp`] — an embedded convex mixed-integer QP solver: dense
//!   operator-splitting QP relaxations inside best-first branch-and-bound.
//! * [`controllers`] — compilation of the target maneuvering program and the
//!   centralized/distributed tracking-and-jamming programs into MIQP models.
//! * [`simulation`] — the closed loop itself, Monte Carlo batches, and the
//!   solver timing comparison.
//! * [`selftest`] — embedded oracle suites (MIQP vs. enumeration, particle
//!   filter vs. Kalman, geometry brute force) used by the CLI self-test.

pub mod controllers;
pub mod dynamics;
pub mod estimation;
pub mod geometry;
pub mod miqp;
pub mod rng;
pub mod selftest;
pub mod sensing;
pub mod simulation;

pub use dynamics::{ControlInput, DynamicsParams, State6, TransitionMatrices};
pub use estimation::{GaussianBelief, HorizonPrediction, ParticleSet};
pub use geometry::{Cuboid, Dodecahedron, GoalRegion};
pub use miqp::{MiqpModel, MiqpOptions, MiqpSolution, MiqpSolver, MiqpStatus};
pub use sensing::{Measurement, SensorParams};
pub use simulation::{RunMetrics, RunOutput, Scenario, StepRecord};
