//! Flight dynamics and control for a variable-pitch quadrotor.
//!
//! A variable-pitch quadrotor keeps its rotors at constant speed and steers
//! thrust by changing blade collective pitch, which lets each rotor pull as
//! well as push. This crate models that vehicle and closes the loop around
//! it:
//!
//! - [`rotor`]: blade-element/momentum maps between collective pitch,
//!   thrust coefficient, and torque coefficient, valid at negative thrust.
//! - [`rigid_body`]: 6-DOF Newton-Euler dynamics of the airframe under the
//!   four-rotor wrench.
//! - [`control`]: a three-loop nonlinear-dynamic-inversion autopilot
//!   (position → attitude → body rate) whose allocation stage commands
//!   thrust-coefficient *rates*, so collectives move continuously through
//!   maneuvers as aggressive as a full roll flip into sustained inverted
//!   flight.
//! - [`sim`]: fixed-step closed-loop integration of plant plus controller
//!   with event-located regime switches, scenario definitions, and summary
//!   metrics.
//! - [`config`] / [`telemetry`]: TOML run configuration and CSV output.
//! - [`acceptance`]: the scripted checks behind `vpquad acceptance`.

pub mod acceptance;
pub mod config;
pub mod control;
pub mod error;
pub mod linalg;
pub mod rigid_body;
pub mod rotor;
pub mod sim;
pub mod telemetry;

pub use config::{Config, OutputConfig, ScenarioConfig, ScenarioKind};
pub use control::{ControlLimits, Gains, NdiController, Orientation, RefPoint};
pub use error::{ConfigError, ControlError, DynamicsError, SimError, ValidationError};
pub use rigid_body::{State12, VehicleParams, Wrench};
pub use rotor::{RotorCommand, RotorModel};
pub use sim::{RefSignal, Scenario, SimOptions, SimRun, Simulation, Summary};
