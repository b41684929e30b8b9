//! Three-loop nonlinear-dynamic-inversion flight controller.
//!
//! Loop structure, outermost first:
//!
//! 1. **Translational loop** — turns a position/velocity/acceleration
//!    reference into a commanded signed thrust and a commanded attitude, by
//!    inverting the point-mass force balance through the current orientation
//!    regime (upright or inverted).
//! 2. **Attitude loop** — inverts the Euler-angle kinematics to turn the
//!    attitude command into commanded body-rate derivatives and the moments
//!    they would require.
//! 3. **Rate loop with allocation** — commands body-rate *accelerations*,
//!    maps them to moment rates, and solves the 4x4 effectiveness system for
//!    the rate of each rotor's thrust coefficient.
//!
//! Working in coefficient rates rather than coefficients makes the allocator
//! the exact Jacobian of the wrench map. That Jacobian stays well defined on
//! both sides of zero collective, which is what lets one control law fly the
//! vehicle upright, through a roll flip, and inverted without switching
//! structure.
//!
//! Command derivatives are produced by first-order filtered differentiators
//! (`y = (x - z)/tau`, `z' = y`), so step changes in the references enter the
//! feedback terms immediately but the feedforward terms smoothly.

use crate::error::{ControlError, ValidationError};
use crate::linalg::Lu4;
use crate::rigid_body::{
    euler_rate_matrix, euler_rate_matrix_dot, euler_rates, hover_thrust_coeff,
    rotation_body_to_inertial, wrench_from_cts, State12, VehicleParams, Wrench,
};
use crate::rotor::{collective_from_ct, ct_from_collective, RotorModel};
use nalgebra::Vector3;
use std::f64::consts::PI;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Per-loop second-order error gains plus the thrust-rate gain.
///
/// Each loop shapes its error dynamics as `e'' + 2 zeta w e' + w^2 e = 0`,
/// componentwise per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    /// Translational-loop damping ratios (x, y, z).
    pub zeta_pos: Vector3<f64>,
    /// Translational-loop natural frequencies [rad/s].
    pub omega_pos: Vector3<f64>,
    /// Attitude-loop damping ratios (roll, pitch, yaw).
    pub zeta_att: Vector3<f64>,
    /// Attitude-loop natural frequencies [rad/s].
    pub omega_att: Vector3<f64>,
    /// Rate-loop damping ratios (p, q, r).
    pub zeta_rate: Vector3<f64>,
    /// Rate-loop natural frequencies [rad/s].
    pub omega_rate: Vector3<f64>,
    /// First-order gain of the thrust regulator [1/s].
    pub thrust_rate_gain: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            zeta_pos: Vector3::new(0.95, 0.95, 0.95),
            omega_pos: Vector3::new(4.7, 4.7, 4.7),
            zeta_att: Vector3::new(0.92, 0.92, 0.92),
            omega_att: Vector3::new(30.5, 30.5, 20.5),
            zeta_rate: Vector3::new(0.91, 0.91, 0.91),
            omega_rate: Vector3::new(50.0, 50.0, 25.0),
            thrust_rate_gain: 10.0,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let groups = [
            ("gains.zeta_pos", &self.zeta_pos),
            ("gains.omega_pos", &self.omega_pos),
            ("gains.zeta_att", &self.zeta_att),
            ("gains.omega_att", &self.omega_att),
            ("gains.zeta_rate", &self.zeta_rate),
            ("gains.omega_rate", &self.omega_rate),
        ];
        for (field, v) in groups {
            if !(v.iter().all(|x| x.is_finite() && *x > 0.0)) {
                return Err(ValidationError::new(
                    field,
                    format!("all components must be strictly positive, got {v:?}"),
                ));
            }
        }
        if !(self.thrust_rate_gain.is_finite() && self.thrust_rate_gain > 0.0) {
            return Err(ValidationError::new(
                "gains.thrust_rate_gain",
                format!("must be strictly positive, got {}", self.thrust_rate_gain),
            ));
        }
        Ok(())
    }
}

/// Saturations, tolerances, and guard thresholds of the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLimits {
    /// Maximum blade collective magnitude [rad]; bounds the reachable
    /// thrust-coefficient magnitude.
    pub collective_max: f64,
    /// Thrust-coefficient magnitude floor used in the yaw row of the
    /// allocation Jacobian, which would otherwise vanish at zero thrust.
    pub ct_floor: f64,
    /// Time constant of the command-derivative filters [s].
    pub filter_tau: f64,
    /// Roll window around the flip target within which the flip is declared
    /// complete [rad].
    pub flip_tolerance: f64,
    /// Thrust-command magnitude below this fraction of hover weight is
    /// treated as degenerate for attitude extraction.
    pub min_thrust_frac: f64,
    /// Singularity guard on |cos(pitch)| in the Euler kinematics.
    pub eps_singular: f64,
    /// Maximum acceptable 1-norm condition number of the allocation matrix.
    pub cond_limit: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            collective_max: 0.35,
            ct_floor: 1.0e-4,
            filter_tau: 0.02,
            flip_tolerance: 0.087,
            min_thrust_frac: 0.05,
            eps_singular: 1.0e-6,
            cond_limit: 1.0e8,
        }
    }
}

impl ControlLimits {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let positives = [
            ("gains.collective_max", self.collective_max),
            ("gains.ct_floor", self.ct_floor),
            ("gains.filter_tau", self.filter_tau),
            ("gains.flip_tolerance", self.flip_tolerance),
            ("gains.eps_singular", self.eps_singular),
            ("gains.cond_limit", self.cond_limit),
        ];
        for (field, value) in positives {
            if !(value.is_finite() && value > 0.0) {
                return Err(ValidationError::new(
                    field,
                    format!("must be strictly positive, got {value}"),
                ));
            }
        }
        if !(self.min_thrust_frac > 0.0 && self.min_thrust_frac < 1.0) {
            return Err(ValidationError::new(
                "gains.min_thrust_frac",
                format!("must lie in (0, 1), got {}", self.min_thrust_frac),
            ));
        }
        if self.flip_tolerance >= PI / 2.0 {
            return Err(ValidationError::new(
                "gains.flip_tolerance",
                format!("must be below pi/2, got {}", self.flip_tolerance),
            ));
        }
        Ok(())
    }
}

/// Orientation-regime bookkeeping carried across the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    /// Commanded flight orientation: `+1` upright, `-1` inverted.
    pub sigma_cmd: f64,
    /// Latched true once a commanded roll flip has reached its target window.
    pub flip: bool,
    /// Orientation sign of the thrust inversion: `-1` while the vehicle's
    /// roof points up (`cos(roll) > 0`), `+1` once it points down. Updated
    /// whenever the roll crosses +-90 degrees.
    pub flag: f64,
}

impl Orientation {
    /// Regime for a vehicle starting upright with an upright command.
    pub fn upright() -> Self {
        Self {
            sigma_cmd: 1.0,
            flip: false,
            flag: -1.0,
        }
    }

    /// Regime at the start of a run with the given command and initial roll.
    pub fn new(sigma_cmd: f64, roll: f64) -> Self {
        Self {
            sigma_cmd,
            flip: false,
            flag: Self::flag_for(roll),
        }
    }

    /// Thrust-inversion sign implied by the roll angle (ties at exactly
    /// +-90 degrees resolve to the upright sign).
    pub fn flag_for(roll: f64) -> f64 {
        if roll.cos() < 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// True while a commanded flip is still in progress; the lateral
    /// position channels are released during this phase.
    pub fn mid_flip(&self) -> bool {
        self.sigma_cmd < 0.0 && !self.flip
    }

    /// Roll angle the current command asks for.
    pub fn roll_target(&self) -> f64 {
        if self.sigma_cmd < 0.0 {
            PI
        } else {
            0.0
        }
    }
}

/// Cumulative controller-event counts over a run, sampled once per
/// committed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventCounters {
    /// Rotor-steps where integration had to truncate a thrust coefficient
    /// at the clamp (rail entries; while pinned, the commanded rate is
    /// already zeroed and nothing is truncated).
    pub ct_clamp: u64,
    /// Steps where a translational demand needed saturating: an arcsine
    /// argument clamped to [-1, 1] or a downward acceleration capped at
    /// free fall.
    pub demand_clamp: u64,
    /// Steps where the allocation Jacobian needed its magnitude floor.
    pub alloc_floor: u64,
    /// Steps where the thrust command was too small to extract a tilt.
    pub degenerate_thrust: u64,
}

/// Translational reference fed to the controller at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    /// Commanded inertial position [m].
    pub pos: Vector3<f64>,
    /// Commanded inertial velocity [m/s].
    pub vel: Vector3<f64>,
    /// Commanded inertial acceleration [m/s^2].
    pub acc: Vector3<f64>,
    /// Commanded yaw [rad].
    pub yaw: f64,
}

impl RefPoint {
    pub fn hold(pos: Vector3<f64>, yaw: f64) -> Self {
        Self {
            pos,
            vel: Vector3::zeros(),
            acc: Vector3::zeros(),
            yaw,
        }
    }
}

/// Continuous controller states integrated alongside the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtrlOde {
    /// Per-rotor thrust coefficients (the virtual actuator states).
    pub ct: [f64; 4],
    /// Filter states tracking the attitude command [rad].
    pub att_cmd_lp: Vector3<f64>,
    /// Filter states tracking the attitude-rate command [rad/s].
    pub att_rate_lp: Vector3<f64>,
    /// Filter states tracking the commanded body-rate derivative [rad/s^2].
    pub rate_acc_lp: Vector3<f64>,
}

/// Output of the translational loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterCommand {
    /// Commanded signed thrust along body z [N].
    pub thrust: f64,
    /// Commanded attitude (roll, pitch, yaw) [rad].
    pub att_cmd: Vector3<f64>,
    /// Commanded inertial acceleration after error shaping [m/s^2].
    pub accel_cmd: Vector3<f64>,
    /// Thrust command too small to define a tilt direction; attitude held.
    pub degenerate: bool,
    /// A translational demand was saturated: an arcsine argument clamped
    /// to [-1, 1] or the vertical acceleration capped at free fall.
    pub demand_clamped: bool,
}

/// Output of the attitude loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerCommand {
    /// Commanded body rates [rad/s].
    pub rate_cmd: Vector3<f64>,
    /// Commanded body-rate derivatives [rad/s^2].
    pub rate_acc_cmd: Vector3<f64>,
    /// Moments that would realize the commanded rate derivatives [N m]
    /// (diagnostic; the allocation works on moment rates instead).
    pub moment_cmd: Vector3<f64>,
}

/// Everything one controller evaluation produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtrlEval {
    pub outer: OuterCommand,
    pub inner: InnerCommand,
    /// Rates of the four thrust coefficients after saturation handling.
    pub ct_dot: [f64; 4],
    /// Derivatives of the three filter-state blocks.
    pub att_cmd_lp_dot: Vector3<f64>,
    pub att_rate_lp_dot: Vector3<f64>,
    pub rate_acc_lp_dot: Vector3<f64>,
    /// Filtered attitude-rate command [rad/s].
    pub att_rate_cmd: Vector3<f64>,
    /// Filtered attitude-acceleration feedforward [rad/s^2].
    pub att_acc_ff: Vector3<f64>,
    /// Commanded moment rates (roll, pitch, yaw) [N m/s].
    pub moment_rate_cmd: Vector3<f64>,
    /// Commanded thrust rate [N/s].
    pub thrust_rate_cmd: f64,
    /// Wrench currently produced by the rotor set.
    pub wrench: Wrench,
    /// The allocation Jacobian needed its thrust-coefficient floor.
    pub alloc_floored: bool,
    /// Per-rotor saturation at the coefficient clamp (rate zeroed outward).
    pub ct_saturated: [bool; 4],
}

/// Parameter bundle of the controller. All evaluation methods are pure.
#[derive(Debug, Clone)]
pub struct NdiController {
    pub vehicle: VehicleParams,
    pub rotor: RotorModel,
    pub gains: Gains,
    pub limits: ControlLimits,
    /// Thrust-coefficient magnitude reachable at the collective limit.
    ct_max: f64,
}

impl NdiController {
    pub fn new(
        vehicle: VehicleParams,
        rotor: RotorModel,
        gains: Gains,
        limits: ControlLimits,
    ) -> Result<Self, ValidationError> {
        vehicle.validate()?;
        rotor.validate()?;
        gains.validate()?;
        limits.validate()?;
        let ct_max = ct_from_collective(limits.collective_max, &rotor);
        Ok(Self {
            vehicle,
            rotor,
            gains,
            limits,
            ct_max,
        })
    }

    /// Controller with all-default parameters.
    pub fn default_setup() -> Self {
        Self::new(
            VehicleParams::default(),
            RotorModel::default(),
            Gains::default(),
            ControlLimits::default(),
        )
        .expect("default parameters are valid")
    }

    /// Largest thrust-coefficient magnitude the collective limit allows.
    pub fn ct_max(&self) -> f64 {
        self.ct_max
    }

    /// Per-rotor thrust coefficient of level hover (positive, upright).
    pub fn hover_ct(&self) -> f64 {
        hover_thrust_coeff(&self.vehicle, &self.rotor)
    }

    /// Translational loop: commanded thrust and attitude from the reference.
    ///
    /// `held_att` is the last valid (roll, pitch) command, reused when the
    /// thrust command is too small to define a tilt direction.
    pub fn outer_loop(
        &self,
        s: &State12,
        refp: &RefPoint,
        ori: Orientation,
        held_att: (f64, f64),
    ) -> OuterCommand {
        let g = self.vehicle.gravity;
        let m = self.vehicle.mass;
        let rot = rotation_body_to_inertial(&s.att);
        let vel_inertial = rot * s.vel;
        let two_zw = 2.0 * self.gains.zeta_pos.component_mul(&self.gains.omega_pos);
        let w2 = self.gains.omega_pos.component_mul(&self.gains.omega_pos);
        let mut acc = refp.acc
            + two_zw.component_mul(&(refp.vel - vel_inertial))
            + w2.component_mul(&(refp.pos - s.pos));
        if ori.mid_flip() {
            // While rolling over, lateral position holds are meaningless and
            // would fight the flip; keep only the vertical channel.
            acc.x = 0.0;
            acc.y = 0.0;
        }
        let mut clamped = false;
        if acc.z > g {
            // Rotor thrust only ever pushes toward the upper half-space, so a
            // dive can never be commanded faster than free fall. Past that
            // boundary the magnitude formula below would read the excess as a
            // climb demand of equal size and feed the error back on itself.
            acc.z = g;
            clamped = true;
        }
        let thrust = m * ori.flag * (acc.x * acc.x + acc.y * acc.y + (g - acc.z).powi(2)).sqrt();
        if thrust.abs() < self.limits.min_thrust_frac * m * g {
            return OuterCommand {
                thrust,
                att_cmd: Vector3::new(held_att.0, held_att.1, refp.yaw),
                accel_cmd: acc,
                degenerate: true,
                demand_clamped: clamped,
            };
        }
        let ux = m * acc.x / thrust;
        let uy = m * acc.y / thrust;
        let (syaw, cyaw) = refp.yaw.sin_cos();
        let mut clamp = |v: f64| {
            if v.abs() > 1.0 {
                clamped = true;
                v.clamp(-1.0, 1.0)
            } else {
                v
            }
        };
        let roll_arg = clamp(ux * syaw - uy * cyaw);
        let roll_raw = roll_arg.asin();
        let roll_cmd = if ori.sigma_cmd < 0.0 {
            PI - roll_raw
        } else {
            roll_raw
        };
        let croll = roll_raw.cos();
        let pitch_arg = clamp((ux * cyaw + uy * syaw) / croll.max(1.0e-12));
        let pitch_sign = if ori.sigma_cmd < 0.0 { -1.0 } else { 1.0 };
        let pitch_cmd = pitch_sign * pitch_arg.asin();
        OuterCommand {
            thrust,
            att_cmd: Vector3::new(roll_cmd, pitch_cmd, refp.yaw),
            accel_cmd: acc,
            degenerate: false,
            demand_clamped: clamped,
        }
    }

    /// Attitude loop: body-rate commands and their derivatives from the
    /// attitude command and its filtered derivatives.
    pub fn attitude_loop(
        &self,
        s: &State12,
        att_cmd: &Vector3<f64>,
        att_rate_cmd: &Vector3<f64>,
        att_acc_ff: &Vector3<f64>,
    ) -> Result<InnerCommand, ControlError> {
        let att_dot = euler_rates(&s.att, &s.rate, self.limits.eps_singular)?;
        let att_err = Vector3::new(
            wrap_angle(att_cmd.x - s.att.x),
            wrap_angle(att_cmd.y - s.att.y),
            wrap_angle(att_cmd.z - s.att.z),
        );
        let two_zw = 2.0 * self.gains.zeta_att.component_mul(&self.gains.omega_att);
        let w2 = self.gains.omega_att.component_mul(&self.gains.omega_att);
        let att_acc_cmd = att_acc_ff
            + two_zw.component_mul(&(att_rate_cmd - att_dot))
            + w2.component_mul(&att_err);
        let wmat = euler_rate_matrix(&s.att);
        let wdot = euler_rate_matrix_dot(&s.att, &att_dot);
        let rate_acc_cmd = wmat * att_acc_cmd + wdot * att_dot;
        let rate_cmd = wmat * att_rate_cmd;
        let (ixx, iyy, izz) = (
            self.vehicle.inertia.x,
            self.vehicle.inertia.y,
            self.vehicle.inertia.z,
        );
        let (p, q, r) = (s.rate.x, s.rate.y, s.rate.z);
        let moment_cmd = Vector3::new(
            ixx * rate_acc_cmd.x + (izz - iyy) * q * r,
            iyy * rate_acc_cmd.y + (ixx - izz) * p * r,
            izz * rate_acc_cmd.z + (iyy - ixx) * p * q,
        );
        Ok(InnerCommand {
            rate_cmd,
            rate_acc_cmd,
            moment_cmd,
        })
    }

    /// Allocation matrix: sensitivity of (thrust, roll, pitch, yaw moment)
    /// to each rotor's thrust coefficient, evaluated at the current
    /// coefficient magnitudes. Returns the matrix and whether the yaw row
    /// needed its magnitude floor.
    ///
    /// The yaw row carries the sign of the commanded thrust regime (`-flag`)
    /// rather than each coefficient's own sign. In steady upright or
    /// inverted flight the two agree; when a transient drives the
    /// coefficients to mixed signs, the regime convention keeps the matrix
    /// invertible (the per-coefficient variant turns the yaw row parallel
    /// to the thrust row exactly where saturated yaw demands park the
    /// actuators), and the model error is absorbed by the rate feedback.
    pub fn effectiveness(&self, ct: &[f64; 4], flag: f64) -> ([[f64; 4]; 4], bool) {
        let k = self.rotor.thrust_gain();
        let dk = self.vehicle.arm * k;
        let kr = self.rotor.torque_gain();
        let spin = [1.0, -1.0, 1.0, -1.0];
        let mut floored = false;
        let mut yaw_row = [0.0; 4];
        for i in 0..4 {
            let mag = ct[i].abs();
            if mag < self.limits.ct_floor {
                floored = true;
            }
            yaw_row[i] =
                spin[i] * kr * 1.5 * (-flag) * (mag.max(self.limits.ct_floor) / 2.0).sqrt();
        }
        (
            [
                [-k, -k, -k, -k],
                [dk, -dk, -dk, dk],
                [dk, dk, -dk, -dk],
                yaw_row,
            ],
            floored,
        )
    }

    /// Full controller evaluation at one instant.
    pub fn eval(
        &self,
        s: &State12,
        ode: &CtrlOde,
        ori: Orientation,
        held_att: (f64, f64),
        refp: &RefPoint,
    ) -> Result<CtrlEval, ControlError> {
        let tau = self.limits.filter_tau;
        let outer = self.outer_loop(s, refp, ori, held_att);

        // Filtered command derivatives.
        let att_rate_cmd = (outer.att_cmd - ode.att_cmd_lp) / tau;
        let att_acc_ff = (att_rate_cmd - ode.att_rate_lp) / tau;

        let inner = self.attitude_loop(s, &outer.att_cmd, &att_rate_cmd, &att_acc_ff)?;

        // Actual wrench and body-rate derivative at the current coefficients.
        let wrench = wrench_from_cts(&ode.ct, &self.rotor, &self.vehicle);
        let (ixx, iyy, izz) = (
            self.vehicle.inertia.x,
            self.vehicle.inertia.y,
            self.vehicle.inertia.z,
        );
        let (p, q, r) = (s.rate.x, s.rate.y, s.rate.z);
        let rate_dot = Vector3::new(
            ((iyy - izz) * q * r + wrench.moment.x) / ixx,
            ((izz - ixx) * p * r + wrench.moment.y) / iyy,
            ((ixx - iyy) * p * q + wrench.moment.z) / izz,
        );

        // Rate loop: commanded body-rate acceleration.
        let rate_acc_ff = (inner.rate_acc_cmd - ode.rate_acc_lp) / tau;
        let two_zw = 2.0 * self.gains.zeta_rate.component_mul(&self.gains.omega_rate);
        let w2 = self.gains.omega_rate.component_mul(&self.gains.omega_rate);
        let rate_jerk_cmd = rate_acc_ff
            + two_zw.component_mul(&(inner.rate_acc_cmd - rate_dot))
            + w2.component_mul(&(inner.rate_cmd - s.rate));

        // Moment rates along the actual accelerations (time derivative of
        // the Euler moment equations).
        let moment_rate_cmd = Vector3::new(
            ixx * rate_jerk_cmd.x + (izz - iyy) * (rate_dot.y * r + q * rate_dot.z),
            iyy * rate_jerk_cmd.y + (ixx - izz) * (rate_dot.x * r + p * rate_dot.z),
            izz * rate_jerk_cmd.z + (iyy - ixx) * (rate_dot.x * q + p * rate_dot.y),
        );
        let thrust_rate_cmd = self.gains.thrust_rate_gain * (outer.thrust - wrench.thrust);

        // Allocation: solve the Jacobian system for coefficient rates.
        let (b, alloc_floored) = self.effectiveness(&ode.ct, ori.flag);
        let lu = Lu4::factor(&b).ok_or(ControlError::SingularAllocation)?;
        let cond = lu.cond_1(&b);
        if !cond.is_finite() || cond > self.limits.cond_limit {
            return Err(ControlError::IllConditionedAllocation {
                cond,
                limit: self.limits.cond_limit,
            });
        }
        let demand = [
            thrust_rate_cmd,
            moment_rate_cmd.x,
            moment_rate_cmd.y,
            moment_rate_cmd.z,
        ];
        let mut ct_dot = lu.solve(&demand);

        // Anti-windup at the coefficient clamp: zero outward rates.
        let mut ct_saturated = [false; 4];
        for i in 0..4 {
            let outward_high = ode.ct[i] >= self.ct_max && ct_dot[i] > 0.0;
            let outward_low = ode.ct[i] <= -self.ct_max && ct_dot[i] < 0.0;
            if outward_high || outward_low {
                ct_dot[i] = 0.0;
                ct_saturated[i] = true;
            }
        }

        Ok(CtrlEval {
            outer,
            inner,
            ct_dot,
            att_cmd_lp_dot: att_rate_cmd,
            att_rate_lp_dot: att_acc_ff,
            rate_acc_lp_dot: rate_acc_ff,
            att_rate_cmd,
            att_acc_ff,
            moment_rate_cmd,
            thrust_rate_cmd,
            wrench,
            alloc_floored,
            ct_saturated,
        })
    }

    /// Filter states that make all command derivatives start at zero for the
    /// given state and reference ("bumpless" start), with the coefficients
    /// initialized as supplied.
    ///
    /// Used at run start and re-applied when the flip latches, so regime
    /// changes do not inject derivative spikes through the filters.
    pub fn seeded_filters(
        &self,
        s: &State12,
        ct: [f64; 4],
        ori: Orientation,
        held_att: (f64, f64),
        refp: &RefPoint,
    ) -> Result<CtrlOde, ControlError> {
        let outer = self.outer_loop(s, refp, ori, held_att);
        let mut ode = CtrlOde {
            ct,
            att_cmd_lp: outer.att_cmd,
            att_rate_lp: Vector3::zeros(),
            rate_acc_lp: Vector3::zeros(),
        };
        let eval = self.eval(s, &ode, ori, held_att, refp)?;
        ode.rate_acc_lp = eval.inner.rate_acc_cmd;
        Ok(ode)
    }

    /// Steps the virtual actuators with explicit Euler and clamps them to
    /// the reachable coefficient range. Returns the new coefficients and a
    /// per-rotor flag marking where the clamp engaged.
    pub fn integrate_virtual(
        &self,
        ct: &[f64; 4],
        ct_dot: &[f64; 4],
        dt: f64,
    ) -> ([f64; 4], [bool; 4]) {
        let mut out = [0.0; 4];
        let mut clamped = [false; 4];
        for i in 0..4 {
            let raw = ct[i] + dt * ct_dot[i];
            let lim = raw.clamp(-self.ct_max, self.ct_max);
            clamped[i] = lim != raw;
            out[i] = lim;
        }
        (out, clamped)
    }

    /// Blade collectives [rad] that realize the given thrust coefficients.
    pub fn collectives(&self, ct: &[f64; 4]) -> [f64; 4] {
        [
            collective_from_ct(ct[0], &self.rotor),
            collective_from_ct(ct[1], &self.rotor),
            collective_from_ct(ct[2], &self.rotor),
            collective_from_ct(ct[3], &self.rotor),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hover_ref() -> RefPoint {
        RefPoint::hold(Vector3::zeros(), 0.0)
    }

    fn hover_ode(ctrl: &NdiController) -> CtrlOde {
        CtrlOde {
            ct: [ctrl.hover_ct(); 4],
            att_cmd_lp: Vector3::zeros(),
            att_rate_lp: Vector3::zeros(),
            rate_acc_lp: Vector3::zeros(),
        }
    }

    #[test]
    fn hover_is_a_fixed_point_of_the_control_law() {
        let ctrl = NdiController::default_setup();
        let s = State12::default();
        let eval = ctrl
            .eval(
                &s,
                &hover_ode(&ctrl),
                Orientation::upright(),
                (0.0, 0.0),
                &hover_ref(),
            )
            .unwrap();
        let mg = ctrl.vehicle.mass * ctrl.vehicle.gravity;
        assert_relative_eq!(eval.outer.thrust, -mg, max_relative = 1e-13);
        assert!(eval.outer.att_cmd.norm() < 1e-15);
        for d in eval.ct_dot {
            assert!(d.abs() < 1e-12, "coefficient rate {d}");
        }
        assert!(eval.att_cmd_lp_dot.norm() < 1e-12);
        assert!(eval.att_rate_lp_dot.norm() < 1e-12);
        assert!(eval.rate_acc_lp_dot.norm() < 1e-12);
        assert!(!eval.outer.degenerate && !eval.alloc_floored);
    }

    #[test]
    fn inverted_hover_is_also_a_fixed_point() {
        let ctrl = NdiController::default_setup();
        let s = State12 {
            att: Vector3::new(PI, 0.0, 0.0),
            ..State12::default()
        };
        let ori = Orientation {
            sigma_cmd: -1.0,
            flip: true,
            flag: 1.0,
        };
        let ode = CtrlOde {
            ct: [-ctrl.hover_ct(); 4],
            att_cmd_lp: Vector3::new(PI, 0.0, 0.0),
            att_rate_lp: Vector3::zeros(),
            rate_acc_lp: Vector3::zeros(),
        };
        let eval = ctrl.eval(&s, &ode, ori, (PI, 0.0), &hover_ref()).unwrap();
        let mg = ctrl.vehicle.mass * ctrl.vehicle.gravity;
        assert_relative_eq!(eval.outer.thrust, mg, max_relative = 1e-13);
        assert_relative_eq!(eval.outer.att_cmd.x, PI, max_relative = 1e-13);
        for d in eval.ct_dot {
            assert!(d.abs() < 1e-9, "coefficient rate {d}");
        }
    }

    #[test]
    fn tilt_commands_point_the_thrust_at_the_acceleration() {
        let ctrl = NdiController::default_setup();
        let s = State12::default();
        let g = ctrl.vehicle.gravity;
        // Ask for +y acceleration: upright vehicle rolls positive.
        let refp = RefPoint {
            pos: Vector3::zeros(),
            vel: Vector3::zeros(),
            acc: Vector3::new(0.0, 2.0, 0.0),
            yaw: 0.0,
        };
        let out = ctrl.outer_loop(&s, &refp, Orientation::upright(), (0.0, 0.0));
        let expected_roll = (2.0 / (2.0f64.powi(2) + g * g).sqrt()).asin();
        assert_relative_eq!(out.att_cmd.x, expected_roll, max_relative = 1e-12);
        assert!(out.att_cmd.y.abs() < 1e-15);
        // Ask for +x acceleration: upright vehicle pitches nose down.
        let refp = RefPoint {
            acc: Vector3::new(2.0, 0.0, 0.0),
            ..refp
        };
        let out = ctrl.outer_loop(&s, &refp, Orientation::upright(), (0.0, 0.0));
        assert!(out.att_cmd.y < 0.0);
        assert!(out.att_cmd.x.abs() < 1e-15);
    }

    #[test]
    fn inverted_tilt_commands_mirror_through_the_flip() {
        let ctrl = NdiController::default_setup();
        let s = State12 {
            att: Vector3::new(PI, 0.0, 0.0),
            ..State12::default()
        };
        let ori = Orientation {
            sigma_cmd: -1.0,
            flip: true,
            flag: 1.0,
        };
        let g = ctrl.vehicle.gravity;
        let refp = RefPoint {
            pos: Vector3::zeros(),
            vel: Vector3::zeros(),
            acc: Vector3::new(0.0, 2.0, 0.0),
            yaw: 0.0,
        };
        let out = ctrl.outer_loop(&s, &refp, ori, (PI, 0.0));
        // Thrust now points along +body z; the roll command moves past pi.
        assert!(out.thrust > 0.0);
        let expected = PI + (2.0 / (4.0 + g * g).sqrt()).asin();
        assert_relative_eq!(out.att_cmd.x, expected, max_relative = 1e-12);
    }

    #[test]
    fn mid_flip_releases_lateral_channels() {
        let ctrl = NdiController::default_setup();
        let s = State12 {
            pos: Vector3::new(0.4, -0.2, 0.0),
            ..State12::default()
        };
        let ori = Orientation::new(-1.0, 0.0);
        assert!(ori.mid_flip());
        let out = ctrl.outer_loop(&s, &hover_ref(), ori, (0.0, 0.0));
        // Despite the lateral position error, the command is a pure flip.
        assert_relative_eq!(out.att_cmd.x, PI, max_relative = 1e-15);
        assert!(out.att_cmd.y.abs() < 1e-15);
        assert!(out.accel_cmd.x == 0.0 && out.accel_cmd.y == 0.0);
    }

    #[test]
    fn degenerate_thrust_holds_the_previous_attitude() {
        let ctrl = NdiController::default_setup();
        let s = State12::default();
        let g = ctrl.vehicle.gravity;
        // Commanding free fall makes the required thrust vanish.
        let refp = RefPoint {
            pos: Vector3::zeros(),
            vel: Vector3::zeros(),
            acc: Vector3::new(0.0, 0.0, g),
            yaw: 0.0,
        };
        let held = (0.21, -0.05);
        let out = ctrl.outer_loop(&s, &refp, Orientation::upright(), held);
        assert!(out.degenerate);
        assert_eq!(out.att_cmd.x, held.0);
        assert_eq!(out.att_cmd.y, held.1);
    }

    #[test]
    fn attitude_error_shaping_matches_hand_computation() {
        // Pure 0.1 rad roll error at rest: the commanded roll acceleration is
        // omega^2 * 0.1 and the moment to realize it is Ixx times that.
        let ctrl = NdiController::default_setup();
        let s = State12::default();
        let inner = ctrl
            .attitude_loop(
                &s,
                &Vector3::new(0.1, 0.0, 0.0),
                &Vector3::zeros(),
                &Vector3::zeros(),
            )
            .unwrap();
        assert_relative_eq!(
            inner.rate_acc_cmd.x,
            30.5 * 30.5 * 0.1,
            max_relative = 1e-13
        );
        assert_relative_eq!(inner.moment_cmd.x, 1.0e-3 * 93.025, max_relative = 1e-13);
        assert!(inner.moment_cmd.y.abs() < 1e-15 && inner.moment_cmd.z.abs() < 1e-15);
    }

    #[test]
    fn attitude_error_wraps_across_the_angle_cut() {
        let ctrl = NdiController::default_setup();
        let s = State12 {
            att: Vector3::new(-PI + 0.1, 0.0, 0.0),
            ..State12::default()
        };
        let inner = ctrl
            .attitude_loop(
                &s,
                &Vector3::new(PI, 0.0, 0.0),
                &Vector3::zeros(),
                &Vector3::zeros(),
            )
            .unwrap();
        // The short way from -pi+0.1 to pi is -0.1 rad, not +2pi-0.1.
        assert_relative_eq!(
            inner.rate_acc_cmd.x,
            30.5 * 30.5 * -0.1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn allocation_matrix_matches_wrench_differences_in_regime() {
        // Where every coefficient sign agrees with the thrust regime the
        // allocation matrix is the exact wrench Jacobian.
        let ctrl = NdiController::default_setup();
        let cases = [
            ([0.012, 0.009, 0.011, 0.0105], -1.0),
            ([-0.012, -0.009, -0.011, -0.0105], 1.0),
        ];
        let h = 1e-7;
        for (ct, flag) in cases {
            let (b, floored) = ctrl.effectiveness(&ct, flag);
            assert!(!floored);
            for col in 0..4 {
                let mut hi = ct;
                let mut lo = ct;
                hi[col] += h;
                lo[col] -= h;
                let wh = wrench_from_cts(&hi, &ctrl.rotor, &ctrl.vehicle);
                let wl = wrench_from_cts(&lo, &ctrl.rotor, &ctrl.vehicle);
                let num = [
                    (wh.thrust - wl.thrust) / (2.0 * h),
                    (wh.moment.x - wl.moment.x) / (2.0 * h),
                    (wh.moment.y - wl.moment.y) / (2.0 * h),
                    (wh.moment.z - wl.moment.z) / (2.0 * h),
                ];
                for row in 0..4 {
                    assert_relative_eq!(b[row][col], num[row], max_relative = 1e-6, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn yaw_row_follows_the_regime_not_the_coefficient_signs() {
        let ctrl = NdiController::default_setup();
        let c = 0.01;
        let (b_up, _) = ctrl.effectiveness(&[c; 4], -1.0);
        let (b_down, _) = ctrl.effectiveness(&[-c; 4], 1.0);
        for i in 0..4 {
            assert_relative_eq!(b_down[3][i], -b_up[3][i], max_relative = 1e-14);
        }
        // Mixed coefficient signs keep the alternating yaw pattern, so the
        // matrix stays regular even with the coefficients railed at (+,-,+,-).
        let m = ctrl.ct_max();
        let (b_mixed, _) = ctrl.effectiveness(&[m, -m, m, -m], -1.0);
        let lu = Lu4::factor(&b_mixed).expect("railed pattern must stay invertible");
        assert!(lu.cond_1(&b_mixed) < ctrl.limits.cond_limit);
        assert_eq!(b_mixed[3][0], b_up[3][0].signum() * b_mixed[3][0].abs());
    }

    #[test]
    fn coefficient_floor_keeps_the_allocator_solvable_at_zero_thrust() {
        let ctrl = NdiController::default_setup();
        let (b, floored) = ctrl.effectiveness(&[0.0; 4], -1.0);
        assert!(floored);
        let lu = Lu4::factor(&b).expect("floored allocation matrix must factor");
        assert!(lu.cond_1(&b) < ctrl.limits.cond_limit);
    }

    #[test]
    fn saturation_zeroes_outward_rates_only() {
        let ctrl = NdiController::default_setup();
        let s = State12::default();
        let mut ode = hover_ode(&ctrl);
        // All rotors pinned at the clamp while the reference asks for even
        // more lift: every rate must be projected to zero.
        ode.ct = [ctrl.ct_max(); 4];
        let refp = RefPoint {
            pos: Vector3::new(0.0, 0.0, -0.5),
            vel: Vector3::zeros(),
            acc: Vector3::zeros(),
            yaw: 0.0,
        };
        let eval = ctrl
            .eval(&s, &ode, Orientation::upright(), (0.0, 0.0), &refp)
            .unwrap();
        assert_eq!(eval.ct_saturated, [true; 4]);
        assert_eq!(eval.ct_dot, [0.0; 4]);
        // The same demand away from the clamp drives the rates upward.
        let free = ctrl
            .eval(
                &s,
                &hover_ode(&ctrl),
                Orientation::upright(),
                (0.0, 0.0),
                &refp,
            )
            .unwrap();
        assert_eq!(free.ct_saturated, [false; 4]);
        assert!(free.ct_dot.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn condition_limit_aborts_the_allocation() {
        let mut ctrl = NdiController::default_setup();
        ctrl.limits.cond_limit = 1.0;
        let s = State12::default();
        let err = ctrl
            .eval(
                &s,
                &hover_ode(&ctrl),
                Orientation::upright(),
                (0.0, 0.0),
                &hover_ref(),
            )
            .unwrap_err();
        assert!(matches!(err, ControlError::IllConditionedAllocation { .. }));
    }

    #[test]
    fn virtual_actuators_clamp_at_the_collective_limit() {
        let ctrl = NdiController::default_setup();
        let ct = [ctrl.ct_max() - 1e-5, 0.0, -ctrl.ct_max() + 1e-5, 0.0];
        let rate = [1.0, 0.5, -1.0, -0.5];
        let (next, clamped) = ctrl.integrate_virtual(&ct, &rate, 0.01);
        assert_eq!(next[0], ctrl.ct_max());
        assert_eq!(next[2], -ctrl.ct_max());
        assert!(clamped[0] && clamped[2] && !clamped[1] && !clamped[3]);
        assert_relative_eq!(next[1], 0.005, max_relative = 1e-15);
    }

    #[test]
    fn seeded_filters_produce_zero_command_derivatives() {
        let ctrl = NdiController::default_setup();
        let s = State12 {
            att: Vector3::new(0.3, -0.2, 0.1),
            rate: Vector3::new(0.4, 0.1, -0.2),
            ..State12::default()
        };
        let ode = ctrl
            .seeded_filters(
                &s,
                [ctrl.hover_ct(); 4],
                Orientation::upright(),
                (0.0, 0.0),
                &hover_ref(),
            )
            .unwrap();
        let eval = ctrl
            .eval(&s, &ode, Orientation::upright(), (0.0, 0.0), &hover_ref())
            .unwrap();
        assert!(eval.att_rate_cmd.norm() < 1e-12);
        assert!(eval.att_acc_ff.norm() < 1e-12);
        assert!(eval.rate_acc_lp_dot.norm() < 1e-12);
    }

    #[test]
    fn flip_bookkeeping_tracks_roll_quadrants() {
        assert_eq!(Orientation::flag_for(0.0), -1.0);
        assert_eq!(Orientation::flag_for(PI), 1.0);
        assert_eq!(Orientation::flag_for(PI / 2.0 + 1e-6), 1.0);
        assert_eq!(Orientation::flag_for(PI / 2.0), -1.0); // tie -> upright
        assert_eq!(Orientation::flag_for(-2.0), 1.0);
        let ori = Orientation::new(-1.0, 0.0);
        assert!(ori.mid_flip());
        assert_eq!(ori.roll_target(), PI);
        let done = Orientation { flip: true, ..ori };
        assert!(!done.mid_flip());
    }

    #[test]
    fn wrap_angle_covers_the_cut() {
        assert_relative_eq!(wrap_angle(PI), PI, max_relative = 1e-15);
        assert_relative_eq!(wrap_angle(-PI), PI, max_relative = 1e-15);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(wrap_angle(-0.25), -0.25, max_relative = 1e-15);
        assert_relative_eq!(wrap_angle(2.0 * PI + 0.25), 0.25, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn allocation_solution_reproduces_the_demand(
            c1 in -0.018f64..0.018,
            c2 in -0.018f64..0.018,
            c3 in -0.018f64..0.018,
            c4 in -0.018f64..0.018,
            td in -50.0f64..50.0,
            ld in -20.0f64..20.0,
            md in -20.0f64..20.0,
            nd in -2.0f64..2.0,
        ) {
            let ctrl = NdiController::default_setup();
            let (b, _) = ctrl.effectiveness(&[c1, c2, c3, c4], -1.0);
            let lu = Lu4::factor(&b).unwrap();
            let u = lu.solve(&[td, ld, md, nd]);
            let mut back = [0.0; 4];
            for row in 0..4 {
                back[row] = (0..4).map(|i| b[row][i] * u[i]).sum();
            }
            let demand = [td, ld, md, nd];
            for row in 0..4 {
                let scale = demand[row].abs().max(1.0);
                prop_assert!((back[row] - demand[row]).abs() < 1e-9 * scale,
                    "row {row}: {} vs {}", back[row], demand[row]);
            }
        }

        #[test]
        fn thrust_command_magnitude_is_orientation_symmetric(
            ax in -5.0f64..5.0,
            ay in -5.0f64..5.0,
            az in -5.0f64..5.0,
        ) {
            let ctrl = NdiController::default_setup();
            let s_up = State12::default();
            let s_dn = State12 { att: Vector3::new(PI, 0.0, 0.0), ..State12::default() };
            let refp = RefPoint {
                pos: Vector3::zeros(),
                vel: Vector3::zeros(),
                acc: Vector3::new(ax, ay, az),
                yaw: 0.0,
            };
            let up = ctrl.outer_loop(&s_up, &refp, Orientation::upright(), (0.0, 0.0));
            let ori_dn = Orientation { sigma_cmd: -1.0, flip: true, flag: 1.0 };
            let dn = ctrl.outer_loop(&s_dn, &refp, ori_dn, (PI, 0.0));
            prop_assert!((up.thrust + dn.thrust).abs() < 1e-9 * up.thrust.abs().max(1.0));
        }
    }
}
