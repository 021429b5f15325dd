//! Simulation workbench for safety-critical quadrotor control.
//!
//! Three cascaded controller stacks run against a full rigid-body plant:
//! a plain Euler-Angle PD/PID, the one-step CLF-CBF-QP, and a predictive
//! position controller that enforces control-barrier rows over a finite
//! horizon (MPCBF). A dense interior-point QP solver backs every optimal
//! controller, and the scenario/metrics layer reproduces desk-scale
//! obstacle-avoidance comparisons between them.

pub mod cli;
pub mod config;
pub mod controllers;
pub mod dynamics;
pub mod mpcbf;
pub mod qp;
pub mod scenario;
pub mod sim;
pub mod so3;

pub use config::{apply_overrides, parse_config, serialize_config, Config};
pub use controllers::{AttitudeCbfParams, AttitudeClfParams, EaGains, PositionClfParams};
pub use dynamics::{ControlCommand, DiscreteModel, PlantParams, PlantState};
pub use mpcbf::{MpcbfConfig, MpcbfController, MpcbfSolution};
pub use qp::{kkt_residual, QpProblem, QpSolution, QpSolver, QpStatus};
pub use scenario::{Obstacle, ReferencePoint, SafetyGeometry, ScenarioSpec};
pub use sim::{run_simulation, ControllerId, MetricsReport, SimConfig, SimResult};
pub use so3::{attitude_error, euler_to_rotation, hat, rotation_to_euler, vee, EulerZyx, Rotation};
