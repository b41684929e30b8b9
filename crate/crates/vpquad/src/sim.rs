//! Fixed-step closed-loop simulation of the controlled vehicle.
//!
//! Each step evaluates the control law once at the step's start, advances
//! the rigid body with classical fourth-order Runge-Kutta while the rotor
//! wrench is held constant over the step, and advances the controller's
//! virtual states — thrust coefficients and command filters — with a
//! matched explicit Euler update of the same step size. The coefficient
//! update clamps to the range the collective limit can reach, so the
//! virtual actuators can never wind up past their hardware. Regime
//! bookkeeping (thrust-inversion sign, flip latch) runs on the step grid.

use crate::control::{
    wrap_angle, CtrlEval, CtrlOde, EventCounters, NdiController, Orientation, RefPoint,
};
use crate::error::{DynamicsError, SimError};
use crate::rigid_body::{state_derivative, State12, VehicleParams, Wrench};
use crate::telemetry::Frame;
use nalgebra::{SVector, Vector3};
use std::f64::consts::PI;
use std::time::Instant;

/// One classical Runge-Kutta step of size `h` for a fallible field.
pub fn rk4_step<const N: usize, E>(
    f: &mut impl FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
    t: f64,
    y: &SVector<f64, N>,
    h: f64,
) -> Result<SVector<f64, N>, E> {
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// One rigid-body step under a wrench held constant over the interval.
pub fn plant_step(
    s: &State12,
    w: &Wrench,
    vehicle: &VehicleParams,
    eps: f64,
    dt: f64,
) -> Result<State12, DynamicsError> {
    let mut f = |_t: f64, y: &SVector<f64, 12>| {
        let mut a = [0.0; 12];
        a.copy_from_slice(y.as_slice());
        let ds = state_derivative(&State12::from_array(&a), w, vehicle, eps)?;
        Ok(SVector::from(ds.to_array()))
    };
    let y = rk4_step(&mut f, 0.0, &SVector::from(s.to_array()), dt)?;
    let mut a = [0.0; 12];
    a.copy_from_slice(y.as_slice());
    Ok(State12::from_array(&a))
}

/// Translational reference trajectory of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum RefSignal {
    /// Hold a fixed position.
    Hold { pos: Vector3<f64> },
    /// Componentwise sinusoid `center + amplitude * sin(omega * t)`.
    Sinusoid {
        center: Vector3<f64>,
        amplitude: Vector3<f64>,
        omega: Vector3<f64>,
    },
}

impl RefSignal {
    /// Reference point at time `t` (with consistent velocity and
    /// acceleration feedforward).
    pub fn sample(&self, t: f64, yaw: f64) -> RefPoint {
        match self {
            Self::Hold { pos } => RefPoint::hold(*pos, yaw),
            Self::Sinusoid {
                center,
                amplitude,
                omega,
            } => {
                let phase = omega * t;
                let sin = phase.map(f64::sin);
                let cos = phase.map(f64::cos);
                RefPoint {
                    pos: center + amplitude.component_mul(&sin),
                    vel: amplitude.component_mul(&omega.component_mul(&cos)),
                    acc: -amplitude.component_mul(&omega.component_mul(&omega.component_mul(&sin))),
                    yaw,
                }
            }
        }
    }
}

/// A complete simulation case: initial condition, orientation command, and
/// reference trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub initial: State12,
    /// Commanded orientation: +1 upright, -1 commands a roll flip.
    pub sigma_cmd: f64,
    /// Motion reference tracked in the commanded regime.
    pub motion: RefSignal,
    /// Position held while a commanded flip is still in progress (only its
    /// vertical channel acts; the lateral channels are released mid-flip).
    pub flip_hold: Vector3<f64>,
    /// Start the motion clock at the instant the flip latches.
    pub clock_from_latch: bool,
    /// Commanded yaw throughout [rad].
    pub yaw_cmd: f64,
    /// Run length [s].
    pub duration: f64,
}

impl Scenario {
    /// Stationary hover at the origin.
    pub fn hover(duration: f64) -> Self {
        Self {
            name: "hover".into(),
            initial: State12::default(),
            sigma_cmd: 1.0,
            motion: RefSignal::Hold {
                pos: Vector3::zeros(),
            },
            flip_hold: Vector3::zeros(),
            clock_from_latch: false,
            yaw_cmd: 0.0,
            duration,
        }
    }

    /// Recovery to hover from a large initial attitude [deg].
    pub fn stabilization(initial_att_deg: Vector3<f64>, duration: f64) -> Self {
        Self {
            name: "stabilization".into(),
            initial: State12 {
                att: initial_att_deg.map(f64::to_radians),
                ..State12::default()
            },
            sigma_cmd: 1.0,
            motion: RefSignal::Hold {
                pos: Vector3::zeros(),
            },
            flip_hold: Vector3::zeros(),
            clock_from_latch: false,
            yaw_cmd: 0.0,
            duration,
        }
    }

    /// Upright tracking of a componentwise sinusoid started from its center.
    pub fn tracking(amplitude: Vector3<f64>, omega: Vector3<f64>, duration: f64) -> Self {
        // Start on the reference: at t = 0 the sinusoid sits at the origin
        // with zero acceleration (level attitude) but maximum velocity, so
        // the level vehicle is on the trajectory exactly when its velocity
        // matches. Starting at rest instead would demand an instantaneous
        // correction several times beyond the collective envelope.
        let initial = State12 {
            vel: amplitude.component_mul(&omega),
            ..State12::default()
        };
        Self {
            name: "tracking".into(),
            initial,
            sigma_cmd: 1.0,
            motion: RefSignal::Sinusoid {
                center: Vector3::zeros(),
                amplitude,
                omega,
            },
            flip_hold: Vector3::zeros(),
            clock_from_latch: false,
            yaw_cmd: 0.0,
            duration,
        }
    }

    /// Roll flip from upright hover to inverted hover over the start point.
    pub fn flip(duration: f64) -> Self {
        Self {
            name: "flip".into(),
            initial: State12::default(),
            sigma_cmd: -1.0,
            motion: RefSignal::Hold {
                pos: Vector3::zeros(),
            },
            flip_hold: Vector3::zeros(),
            clock_from_latch: false,
            yaw_cmd: 0.0,
            duration,
        }
    }

    /// Roll flip followed by inverted tracking of a sinusoid whose clock
    /// starts when the flip latches.
    pub fn inverted_tracking(amplitude: Vector3<f64>, omega: Vector3<f64>, duration: f64) -> Self {
        Self {
            name: "inverted_tracking".into(),
            initial: State12::default(),
            sigma_cmd: -1.0,
            motion: RefSignal::Sinusoid {
                center: Vector3::zeros(),
                amplitude,
                omega,
            },
            flip_hold: Vector3::zeros(),
            clock_from_latch: true,
            yaw_cmd: 0.0,
            duration,
        }
    }

    /// Reference point active at time `t` in the given regime.
    pub fn reference(&self, t: f64, ori: Orientation, t_latch: Option<f64>) -> RefPoint {
        if ori.mid_flip() {
            return RefPoint::hold(self.flip_hold, self.yaw_cmd);
        }
        let clock = if self.clock_from_latch {
            t - t_latch.unwrap_or(0.0)
        } else {
            t
        };
        self.motion.sample(clock, self.yaw_cmd)
    }

    /// Roll angle the scenario converges to.
    pub fn terminal_roll(&self) -> f64 {
        if self.sigma_cmd < 0.0 {
            PI
        } else {
            0.0
        }
    }
}

/// Integration options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Step size [s].
    pub dt: f64,
    /// Log every n-th step (the initial state is always logged).
    pub decimation: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1.0e-3,
            decimation: 10,
        }
    }
}

/// Scalar metrics computed from a finished (or aborted) run.
#[derive(Debug, Clone)]
pub struct Summary {
    pub scenario: String,
    /// Time actually simulated [s].
    pub simulated: f64,
    pub steps: u64,
    /// Time after which the attitude error stays inside 5% of its initial
    /// value (None when the initial error is negligible or it never stays).
    pub att_settle_time: Option<f64>,
    /// Time after which the position error stays below 0.05 m.
    pub pos_recover_time: Option<f64>,
    /// Largest blade-collective magnitude over the run [rad].
    pub max_collective: f64,
    /// Largest position-reference error over the run [m].
    pub max_pos_err: f64,
    /// RMS position error over the final five seconds [m].
    pub rms_pos_err_final: f64,
    pub final_pos_err: f64,
    /// |altitude - reference altitude| at the end of the run [m].
    pub final_alt_drift: f64,
    /// Time the roll flip latched, if one was commanded and completed.
    pub flip_latch_time: Option<f64>,
    /// Largest lateral displacement from the start point during the flip
    /// window (command to half a second past the latch) [m].
    pub flip_max_lateral: f64,
    /// Largest vertical displacement during the flip window [m].
    pub flip_max_vertical: f64,
    pub final_ct: [f64; 4],
    pub counters: EventCounters,
    /// Wall-clock time of the integration [s].
    pub wall_time: f64,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "scenario            : {}", self.scenario)?;
        writeln!(
            f,
            "simulated           : {:.3} s in {} steps ({:.3} s wall)",
            self.simulated, self.steps, self.wall_time
        )?;
        match self.att_settle_time {
            Some(t) => writeln!(f, "attitude settled    : {t:.3} s (5% band)")?,
            None => writeln!(f, "attitude settled    : n/a")?,
        }
        match self.pos_recover_time {
            Some(t) => writeln!(f, "position recovered  : {t:.3} s (< 0.05 m)")?,
            None => writeln!(f, "position recovered  : n/a")?,
        }
        if let Some(t) = self.flip_latch_time {
            writeln!(f, "flip latched        : {t:.4} s")?;
            writeln!(
                f,
                "flip displacement   : {:.3} m lateral, {:.3} m vertical",
                self.flip_max_lateral, self.flip_max_vertical
            )?;
        }
        writeln!(
            f,
            "position error      : max {:.4} m, final {:.4} m, rms(final 5 s) {:.4} m",
            self.max_pos_err, self.final_pos_err, self.rms_pos_err_final
        )?;
        writeln!(
            f,
            "max collective      : {:.3} deg",
            self.max_collective.to_degrees()
        )?;
        writeln!(f, "final alt drift     : {:.4} m", self.final_alt_drift)?;
        writeln!(
            f,
            "final coefficients  : [{:.6}, {:.6}, {:.6}, {:.6}]",
            self.final_ct[0], self.final_ct[1], self.final_ct[2], self.final_ct[3]
        )?;
        write!(
            f,
            "events              : {} ct-clamp, {} demand-clamp, {} alloc-floor, {} degenerate-thrust",
            self.counters.ct_clamp,
            self.counters.demand_clamp,
            self.counters.alloc_floor,
            self.counters.degenerate_thrust
        )
    }
}

/// Result of a run: telemetry frames, summary metrics, and the error that
/// ended the run early, if any.
#[derive(Debug)]
pub struct SimRun {
    pub frames: Vec<Frame>,
    pub summary: Summary,
    pub error: Option<SimError>,
}

/// Per-step record used for the error-history metrics.
#[derive(Debug, Clone, Copy)]
struct ErrSample {
    t: f64,
    pos_err: f64,
    att_err: f64,
}

/// Closed-loop simulation of one scenario.
pub struct Simulation {
    ctrl: NdiController,
    scenario: Scenario,
    opts: SimOptions,
    step_idx: u64,
    s: State12,
    code: CtrlOde,
    ori: Orientation,
    t_latch: Option<f64>,
    held_att: (f64, f64),
    counters: EventCounters,
    frames: Vec<Frame>,
    errors: Vec<ErrSample>,
    max_collective: f64,
    flip_max_lateral: f64,
    flip_max_vertical: f64,
}

impl Simulation {
    /// Prepares a run: orientation regime from the initial roll, virtual
    /// actuators at the hover trim of that regime, command filters seeded
    /// so all command derivatives start at zero.
    pub fn new(
        ctrl: NdiController,
        scenario: Scenario,
        opts: SimOptions,
    ) -> Result<Self, SimError> {
        assert!(opts.dt > 0.0, "step size must be positive");
        assert!(opts.decimation >= 1, "decimation must be at least 1");
        let s0 = scenario.initial;
        let ori = Orientation::new(scenario.sigma_cmd, s0.att.x);
        let held = (s0.att.x, s0.att.y);
        let ct0 = [-ori.flag * ctrl.hover_ct(); 4];
        let refp = scenario.reference(0.0, ori, None);
        let code = ctrl
            .seeded_filters(&s0, ct0, ori, held, &refp)
            .map_err(|e| SimError::control(0.0, e))?;
        Ok(Self {
            ctrl,
            scenario,
            opts,
            step_idx: 0,
            s: s0,
            code,
            ori,
            t_latch: None,
            held_att: held,
            counters: EventCounters::default(),
            frames: Vec::new(),
            errors: Vec::new(),
            max_collective: 0.0,
            flip_max_lateral: 0.0,
            flip_max_vertical: 0.0,
        })
    }

    /// Controller evaluation at the current step boundary.
    fn eval_now(&self, t: f64, refp: &RefPoint) -> Result<CtrlEval, SimError> {
        self.ctrl
            .eval(&self.s, &self.code, self.ori, self.held_att, refp)
            .map_err(|e| SimError::control(t, e))
    }

    /// Bookkeeping at a step boundary: event counters, held attitude,
    /// metric accumulators, and the telemetry frame on the decimation grid.
    fn observe(&mut self, t: f64, eval: &CtrlEval, refp: &RefPoint) {
        if eval.outer.degenerate {
            self.counters.degenerate_thrust += 1;
        } else {
            self.held_att = (eval.outer.att_cmd.x, eval.outer.att_cmd.y);
        }
        if eval.outer.demand_clamped {
            self.counters.demand_clamp += 1;
        }
        if eval.alloc_floored {
            self.counters.alloc_floor += 1;
        }

        for c in self.ctrl.collectives(&self.code.ct) {
            self.max_collective = self.max_collective.max(c.abs());
        }

        let pos_err = (self.s.pos - refp.pos).norm();
        let att_err = Vector3::new(
            wrap_angle(self.s.att.x - self.scenario.terminal_roll()),
            wrap_angle(self.s.att.y),
            wrap_angle(self.s.att.z - self.scenario.yaw_cmd),
        )
        .norm();
        self.errors.push(ErrSample {
            t,
            pos_err,
            att_err,
        });

        if self.scenario.sigma_cmd < 0.0 {
            let in_window = match self.t_latch {
                Some(tl) => t <= tl + 0.5,
                None => true,
            };
            if in_window {
                let d = self.s.pos - self.scenario.initial.pos;
                self.flip_max_lateral = self.flip_max_lateral.max(d.xy().norm());
                self.flip_max_vertical = self.flip_max_vertical.max(d.z.abs());
            }
        }

        if self.step_idx.is_multiple_of(self.opts.decimation as u64) {
            let frame = Frame {
                t,
                state: self.s,
                ct: self.code.ct,
                collective: self.ctrl.collectives(&self.code.ct),
                wrench: eval.wrench,
                thrust_cmd: eval.outer.thrust,
                att_cmd: eval.outer.att_cmd,
                ref_pos: refp.pos,
                flag: self.ori.flag,
                flip: self.ori.flip,
                sigma_cmd: self.ori.sigma_cmd,
                degenerate: eval.outer.degenerate,
                counters: self.counters,
            };
            self.frames.push(frame);
        }
    }

    /// Advances the closed loop by one step from time `t`.
    fn advance(&mut self, t: f64, eval: &CtrlEval) -> Result<(), SimError> {
        let dt = self.opts.dt;

        self.s = plant_step(
            &self.s,
            &eval.wrench,
            &self.ctrl.vehicle,
            self.ctrl.limits.eps_singular,
            dt,
        )
        .map_err(|e| SimError::control(t, e))?;

        let (ct, clamped) = self.ctrl.integrate_virtual(&self.code.ct, &eval.ct_dot, dt);
        self.code.ct = ct;
        self.counters.ct_clamp += clamped.iter().filter(|c| **c).count() as u64;
        self.code.att_cmd_lp += eval.att_cmd_lp_dot * dt;
        self.code.att_rate_lp += eval.att_rate_lp_dot * dt;
        self.code.rate_acc_lp += eval.rate_acc_lp_dot * dt;

        self.step_idx += 1;
        let t_next = self.step_idx as f64 * dt;

        if !self.is_finite() {
            return Err(SimError::NonFinite { t: t_next });
        }

        // Regime bookkeeping at the new state.
        self.ori.flag = Orientation::flag_for(self.s.att.x);
        if self.ori.mid_flip() {
            let gap = wrap_angle(self.s.att.x - self.ori.roll_target()).abs();
            if gap < self.ctrl.limits.flip_tolerance {
                self.ori.flip = true;
                self.t_latch = Some(t_next);
                // Reseed the command filters under the post-flip reference
                // so the regime change enters the feedforward smoothly.
                let refp = self.scenario.reference(t_next, self.ori, self.t_latch);
                self.code = self
                    .ctrl
                    .seeded_filters(&self.s, self.code.ct, self.ori, self.held_att, &refp)
                    .map_err(|e| SimError::control(t_next, e))?;
            }
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.s.to_array().iter().all(|v| v.is_finite())
            && self.code.ct.iter().all(|v| v.is_finite())
            && self.code.att_cmd_lp.iter().all(|v| v.is_finite())
            && self.code.att_rate_lp.iter().all(|v| v.is_finite())
            && self.code.rate_acc_lp.iter().all(|v| v.is_finite())
    }

    /// Runs the scenario to completion (or first failure).
    pub fn run(mut self) -> SimRun {
        let start = Instant::now();
        let n_steps = (self.scenario.duration / self.opts.dt).round() as u64;
        let mut error = None;
        for k in 0..=n_steps {
            let t = k as f64 * self.opts.dt;
            let refp = self.scenario.reference(t, self.ori, self.t_latch);
            let eval = match self.eval_now(t, &refp) {
                Ok(e) => e,
                Err(e) => {
                    error = Some(e);
                    break;
                }
            };
            self.observe(t, &eval, &refp);
            if k == n_steps {
                break;
            }
            if let Err(e) = self.advance(t, &eval) {
                error = Some(e);
                break;
            }
        }
        let wall = start.elapsed().as_secs_f64();
        let summary = self.summarize(wall);
        SimRun {
            frames: self.frames,
            summary,
            error,
        }
    }

    fn summarize(&self, wall_time: f64) -> Summary {
        let last = self.errors.last();
        let simulated = last.map_or(0.0, |e| e.t);
        let final_pos_err = last.map_or(f64::NAN, |e| e.pos_err);
        let max_pos_err = self
            .errors
            .iter()
            .map(|e| e.pos_err)
            .fold(0.0_f64, f64::max);

        // RMS over the final five seconds (or the whole run if shorter).
        let rms_start = simulated - 5.0;
        let tail: Vec<f64> = self
            .errors
            .iter()
            .filter(|e| e.t >= rms_start)
            .map(|e| e.pos_err)
            .collect();
        let rms_pos_err_final = if tail.is_empty() {
            f64::NAN
        } else {
            (tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64).sqrt()
        };

        // Settle/recover scans from the end of the run.
        let initial_att_err = self.errors.first().map_or(0.0, |e| e.att_err);
        let att_settle_time = if initial_att_err > 1e-9 {
            stays_below_after(&self.errors, |e| e.att_err, 0.05 * initial_att_err)
        } else {
            None
        };
        let pos_recover_time = stays_below_after(&self.errors, |e| e.pos_err, 0.05);

        // Final altitude drift against the active reference.
        let final_alt_drift = self.errors.last().map_or(f64::NAN, |_| {
            let refp = self.scenario.reference(simulated, self.ori, self.t_latch);
            (self.s.pos.z - refp.pos.z).abs()
        });

        Summary {
            scenario: self.scenario.name.clone(),
            simulated,
            steps: self.step_idx,
            att_settle_time,
            pos_recover_time,
            max_collective: self.max_collective,
            max_pos_err,
            rms_pos_err_final,
            final_pos_err,
            final_alt_drift,
            flip_latch_time: self.t_latch,
            flip_max_lateral: self.flip_max_lateral,
            flip_max_vertical: self.flip_max_vertical,
            final_ct: self.code.ct,
            counters: self.counters,
            wall_time,
        }
    }
}

/// First time after which `metric` stays strictly below `threshold`
/// until the end of the series.
fn stays_below_after(
    errors: &[ErrSample],
    metric: impl Fn(&ErrSample) -> f64,
    threshold: f64,
) -> Option<f64> {
    let mut candidate = None;
    for e in errors.iter().rev() {
        if metric(e) >= threshold {
            return candidate;
        }
        candidate = Some(e.t);
    }
    candidate
}
