//! TOML run configuration.
//!
//! Every field is optional and falls back to the built-in vehicle and
//! controller defaults; unknown keys are rejected so typos surface as
//! errors instead of silently keeping a default. The parsed [`Config`]
//! records which keys the user actually set.

use crate::control::{ControlLimits, Gains, NdiController};
use crate::error::{ConfigError, ValidationError};
use crate::rigid_body::VehicleParams;
use crate::rotor::RotorModel;
use crate::sim::{RefSignal, Scenario, SimOptions};
use nalgebra::Vector3;
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

/// Scenario selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Hover,
    Stabilization,
    Tracking,
    Flip,
    InvertedTracking,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        Self::Hover,
        Self::Stabilization,
        Self::Tracking,
        Self::Flip,
        Self::InvertedTracking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hover => "hover",
            Self::Stabilization => "stabilization",
            Self::Tracking => "tracking",
            Self::Flip => "flip",
            Self::InvertedTracking => "inverted_tracking",
        }
    }

    /// Run length used when the config does not set one [s].
    pub fn default_duration(self) -> f64 {
        match self {
            Self::Hover => 5.0,
            Self::Stabilization => 5.0,
            Self::Tracking => 20.0,
            Self::Flip => 6.0,
            Self::InvertedTracking => 20.0,
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hover" => Ok(Self::Hover),
            "stabilization" | "stabilize" => Ok(Self::Stabilization),
            "tracking" => Ok(Self::Tracking),
            "flip" => Ok(Self::Flip),
            "inverted_tracking" | "inverted" => Ok(Self::InvertedTracking),
            other => Err(ValidationError::new(
                "scenario.kind",
                format!(
                    "unknown scenario '{other}' (expected hover, stabilization, \
                     tracking, flip, or inverted_tracking)"
                ),
            )),
        }
    }
}

/// Scenario settings resolved from the config.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Run length [s]; `None` uses the kind's default.
    pub duration: Option<f64>,
    /// Integration step [s].
    pub dt: f64,
    /// Initial attitude for the stabilization scenario [deg].
    pub initial_attitude_deg: [f64; 3],
    /// Per-axis sinusoid amplitude for the tracking scenarios [m]. The world
    /// z axis points down, so a climb-first vertical sinusoid has a negative
    /// z amplitude.
    pub amplitude: [f64; 3],
    /// Per-axis sinusoid angular frequency for the tracking scenarios [rad/s].
    pub frequency_radps: [f64; 3],
    /// Commanded yaw [deg].
    pub yaw_deg: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Hover,
            duration: None,
            dt: 1.0e-3,
            initial_attitude_deg: [45.0, 30.0, 10.0],
            // Climb first on the vertical axis: an initial dive faster than
            // free fall is unreachable for thrust confined to the upper
            // half-space, so the reference rises where gravity can help.
            amplitude: [1.0, 1.0, -1.0],
            frequency_radps: [0.5 * PI; 3],
            yaw_deg: 0.0,
        }
    }
}

/// Output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Telemetry CSV path (`None` skips the file).
    pub path: Option<String>,
    /// Log every n-th step.
    pub decimation: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: None,
            decimation: 10,
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub vehicle: VehicleParams,
    pub rotor: RotorModel,
    pub gains: Gains,
    pub limits: ControlLimits,
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
    /// Dotted keys the user set explicitly (everything else is a default).
    pub overrides: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    vehicle: Option<RawVehicle>,
    rotor: Option<RawRotor>,
    gains: Option<RawGains>,
    scenario: Option<RawScenario>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    mass: Option<f64>,
    ixx: Option<f64>,
    iyy: Option<f64>,
    izz: Option<f64>,
    arm: Option<f64>,
    gravity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRotor {
    radius: Option<f64>,
    chord: Option<f64>,
    blades: Option<u32>,
    lift_slope: Option<f64>,
    profile_drag: Option<f64>,
    omega_radps: Option<f64>,
    air_density: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    zeta_pos: Option<[f64; 3]>,
    omega_pos: Option<[f64; 3]>,
    zeta_att: Option<[f64; 3]>,
    omega_att: Option<[f64; 3]>,
    zeta_rate: Option<[f64; 3]>,
    omega_rate: Option<[f64; 3]>,
    thrust_rate_gain: Option<f64>,
    collective_max_rad: Option<f64>,
    ct_floor: Option<f64>,
    deriv_filter_tau_s: Option<f64>,
    flip_tolerance_rad: Option<f64>,
    min_thrust_frac: Option<f64>,
    eps_singular: Option<f64>,
    cond_limit: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: Option<String>,
    duration: Option<f64>,
    dt: Option<f64>,
    initial_attitude_deg: Option<[f64; 3]>,
    amplitude: Option<[f64; 3]>,
    frequency_radps: Option<[f64; 3]>,
    yaw_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    decimation: Option<usize>,
}

/// Copies `raw` over `dst` when set, recording the dotted key.
macro_rules! merge {
    ($raw:expr, $dst:expr, $overrides:expr, $section:literal, $($field:ident),+ $(,)?) => {
        $(
            if let Some(v) = $raw.$field {
                $dst.$field = v;
                $overrides.push(concat!($section, ".", stringify!($field)).to_string());
            }
        )+
    };
}

impl Config {
    /// Parses a TOML document over the built-in defaults.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut cfg = Config::default();

        if let Some(v) = raw.vehicle {
            merge!(v, cfg.vehicle, cfg.overrides, "vehicle", mass, arm, gravity);
            if let Some(x) = v.ixx {
                cfg.vehicle.inertia.x = x;
                cfg.overrides.push("vehicle.ixx".into());
            }
            if let Some(x) = v.iyy {
                cfg.vehicle.inertia.y = x;
                cfg.overrides.push("vehicle.iyy".into());
            }
            if let Some(x) = v.izz {
                cfg.vehicle.inertia.z = x;
                cfg.overrides.push("vehicle.izz".into());
            }
        }
        if let Some(r) = raw.rotor {
            merge!(
                r,
                cfg.rotor,
                cfg.overrides,
                "rotor",
                radius,
                chord,
                lift_slope,
                profile_drag,
                air_density
            );
            if let Some(x) = r.blades {
                cfg.rotor.blade_count = x;
                cfg.overrides.push("rotor.blades".into());
            }
            if let Some(x) = r.omega_radps {
                cfg.rotor.omega = x;
                cfg.overrides.push("rotor.omega_radps".into());
            }
        }
        if let Some(g) = raw.gains {
            merge!(g, cfg.gains, cfg.overrides, "gains", thrust_rate_gain);
            {
                let ovr = &mut cfg.overrides;
                let gains = &mut cfg.gains;
                let mut vec_field = |name: &str, raw: Option<[f64; 3]>, dst: &mut Vector3<f64>| {
                    if let Some(x) = raw {
                        *dst = Vector3::from(x);
                        ovr.push(format!("gains.{name}"));
                    }
                };
                vec_field("zeta_pos", g.zeta_pos, &mut gains.zeta_pos);
                vec_field("omega_pos", g.omega_pos, &mut gains.omega_pos);
                vec_field("zeta_att", g.zeta_att, &mut gains.zeta_att);
                vec_field("omega_att", g.omega_att, &mut gains.omega_att);
                vec_field("zeta_rate", g.zeta_rate, &mut gains.zeta_rate);
                vec_field("omega_rate", g.omega_rate, &mut gains.omega_rate);
            }
            {
                let ovr = &mut cfg.overrides;
                let l = &mut cfg.limits;
                let mut lim_field = |name: &str, raw: Option<f64>, dst: &mut f64| {
                    if let Some(x) = raw {
                        *dst = x;
                        ovr.push(format!("gains.{name}"));
                    }
                };
                lim_field(
                    "collective_max_rad",
                    g.collective_max_rad,
                    &mut l.collective_max,
                );
                lim_field("ct_floor", g.ct_floor, &mut l.ct_floor);
                lim_field(
                    "deriv_filter_tau_s",
                    g.deriv_filter_tau_s,
                    &mut l.filter_tau,
                );
                lim_field(
                    "flip_tolerance_rad",
                    g.flip_tolerance_rad,
                    &mut l.flip_tolerance,
                );
                lim_field("min_thrust_frac", g.min_thrust_frac, &mut l.min_thrust_frac);
                lim_field("eps_singular", g.eps_singular, &mut l.eps_singular);
                lim_field("cond_limit", g.cond_limit, &mut l.cond_limit);
            }
        }
        if let Some(s) = raw.scenario {
            merge!(
                s,
                cfg.scenario,
                cfg.overrides,
                "scenario",
                dt,
                initial_attitude_deg,
                amplitude,
                frequency_radps,
                yaw_deg
            );
            if let Some(k) = s.kind {
                cfg.scenario.kind = k.parse()?;
                cfg.overrides.push("scenario.kind".into());
            }
            if let Some(d) = s.duration {
                cfg.scenario.duration = Some(d);
                cfg.overrides.push("scenario.duration".into());
            }
        }
        if let Some(o) = raw.output {
            merge!(o, cfg.output, cfg.overrides, "output", decimation);
            if let Some(p) = o.path {
                cfg.output.path = Some(p);
                cfg.overrides.push("output.path".into());
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a config file.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Checks every block invariant (also called by [`Config::parse_str`]).
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.vehicle.validate()?;
        self.rotor.validate()?;
        self.gains.validate()?;
        self.limits.validate()?;
        if !(self.scenario.dt > 0.0 && self.scenario.dt.is_finite()) {
            return Err(ValidationError::new("scenario.dt", "must be positive"));
        }
        let duration = self.duration();
        if !(duration >= self.scenario.dt && duration.is_finite()) {
            return Err(ValidationError::new(
                "scenario.duration",
                "must be at least one step",
            ));
        }
        if self.output.decimation == 0 {
            return Err(ValidationError::new(
                "output.decimation",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    /// Run length, falling back to the scenario kind's default [s].
    pub fn duration(&self) -> f64 {
        self.scenario
            .duration
            .unwrap_or_else(|| self.scenario.kind.default_duration())
    }

    /// Builds the controller configured here.
    pub fn controller(&self) -> Result<NdiController, ValidationError> {
        NdiController::new(
            self.vehicle.clone(),
            self.rotor.clone(),
            self.gains.clone(),
            self.limits.clone(),
        )
    }

    /// Builds the scenario configured here.
    pub fn build_scenario(&self) -> Scenario {
        let sc = &self.scenario;
        let mut scenario = match sc.kind {
            ScenarioKind::Hover => Scenario::hover(self.duration()),
            ScenarioKind::Stabilization => {
                Scenario::stabilization(Vector3::from(sc.initial_attitude_deg), self.duration())
            }
            ScenarioKind::Tracking => Scenario::tracking(
                Vector3::from(sc.amplitude),
                Vector3::from(sc.frequency_radps),
                self.duration(),
            ),
            ScenarioKind::Flip => Scenario::flip(self.duration()),
            ScenarioKind::InvertedTracking => Scenario::inverted_tracking(
                Vector3::from(sc.amplitude),
                Vector3::from(sc.frequency_radps),
                self.duration(),
            ),
        };
        scenario.yaw_cmd = sc.yaw_deg.to_radians();
        scenario
    }

    /// Integration options configured here.
    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            dt: self.scenario.dt,
            decimation: self.output.decimation,
        }
    }
}

/// Reference signal the tracking scenarios use, exposed for tooling.
pub fn tracking_reference(amplitude: [f64; 3], omega: [f64; 3]) -> RefSignal {
    RefSignal::Sinusoid {
        center: Vector3::zeros(),
        amplitude: Vector3::from(amplitude),
        omega: Vector3::from(omega),
    }
}
