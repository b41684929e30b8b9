//! Scripted acceptance checks.
//!
//! Each check runs a scenario (or a deterministic property sweep) against
//! the default vehicle and gains and reduces the result to one pass/fail
//! line. The CLI `acceptance` subcommand runs them all and exits nonzero
//! if any fail; the integration test suite calls the same functions so CI
//! and the command line agree by construction.

use crate::config::ScenarioKind;
use crate::control::NdiController;
use crate::linalg::Lu4;
use crate::rigid_body::{
    euler_rates, hover_thrust_coeff, rotation_body_to_inertial, state_derivative, State12,
    VehicleParams, Wrench,
};
use crate::rotor::{collective_from_ct, ct_from_collective, RotorModel};
use crate::sim::{rk4_step, Scenario, SimOptions, SimRun, Simulation};
use crate::telemetry::write_csv;
use nalgebra::{DMatrix, Matrix3, SVector, Vector3};
use std::f64::consts::FRAC_PI_2;

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: &'static str, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }
}

/// One row of the pass/fail table.
pub fn render_line(r: &CriterionResult) -> String {
    format!(
        "[{}] {:<24} {}",
        if r.passed { "PASS" } else { "FAIL" },
        format!("{} {}", r.id, r.name),
        r.detail
    )
}

/// Runs every acceptance check in order.
pub fn run_all() -> Vec<CriterionResult> {
    let mut results = vec![
        hover_trim(),
        stabilization(),
        tracking(),
        flip(),
        inverted_tracking(),
    ];
    results.extend(property_suite());
    results
}

pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Default-parameter scenario for a kind (the cases the CLI and the
/// acceptance suite run).
pub fn scenario_for(kind: ScenarioKind) -> Scenario {
    // Climb-first vertical axis (z points down); see `ScenarioConfig`.
    let amp = Vector3::new(1.0, 1.0, -1.0);
    let omega = Vector3::repeat(FRAC_PI_2);
    match kind {
        ScenarioKind::Hover => Scenario::hover(kind.default_duration()),
        ScenarioKind::Stabilization => {
            Scenario::stabilization(Vector3::new(45.0, 30.0, 10.0), kind.default_duration())
        }
        ScenarioKind::Tracking => Scenario::tracking(amp, omega, kind.default_duration()),
        ScenarioKind::Flip => Scenario::flip(kind.default_duration()),
        ScenarioKind::InvertedTracking => {
            Scenario::inverted_tracking(amp, omega, kind.default_duration())
        }
    }
}

fn run_default(kind: ScenarioKind, dt: f64, decimation: usize) -> SimRun {
    let ctrl = NdiController::default_setup();
    let opts = SimOptions { dt, decimation };
    match Simulation::new(ctrl, scenario_for(kind), opts) {
        Ok(sim) => sim.run(),
        Err(e) => panic!("simulation setup cannot fail with defaults: {e}"),
    }
}

/// Criterion 1: hover trim solves the rotor model exactly and matches the
/// weight budget.
pub fn hover_trim() -> CriterionResult {
    let vehicle = VehicleParams::default();
    let rotor = RotorModel::default();
    let ct = hover_thrust_coeff(&vehicle, &rotor);
    let theta = collective_from_ct(ct, &rotor);
    let gain = rotor.thrust_gain();

    // Implicit blade-element/momentum balance the collective must satisfy.
    let sigma_a = rotor.solidity() * rotor.lift_slope;
    let inflow = (ct / 2.0).sqrt();
    let residual = (ct - 0.5 * sigma_a * (theta / 3.0 - inflow / 2.0)).abs();

    let per_rotor = gain * ct;
    let weight_share = vehicle.mass * vehicle.gravity / 4.0;
    let thrust_err = (per_rotor - weight_share).abs();
    let theta_deg = theta.to_degrees();

    let passed = residual < 1e-6 && thrust_err < 1e-9 && theta_deg < 16.0;
    CriterionResult::new(
        "1",
        "hover trim",
        passed,
        format!(
            "ct={ct:.8} collective={theta_deg:.4} deg gain={gain:.2} N \
             thrust={per_rotor:.6} N (want {weight_share:.6} N) residual={residual:.2e}"
        ),
    )
}

/// Criterion 2: recovery from a (45, 30, 10) degree upset.
pub fn stabilization() -> CriterionResult {
    let run = run_default(ScenarioKind::Stabilization, 1e-3, 10);
    let s = &run.summary;
    let settle = s.att_settle_time;
    let recover = s.pos_recover_time;
    let coll_deg = s.max_collective.to_degrees();
    let passed = run.error.is_none()
        && settle.is_some_and(|t| t < 1.0)
        && recover.is_some_and(|t| t < 1.5)
        && coll_deg < 16.0;
    CriterionResult::new(
        "2",
        "attitude stabilization",
        passed,
        format!(
            "settle={} (< 1.0 s) recover={} (< 1.5 s) max collective={coll_deg:.2} deg (< 16){}",
            settle.map_or("never".into(), |t| format!("{t:.3} s")),
            recover.map_or("never".into(), |t| format!("{t:.3} s")),
            err_note(&run),
        ),
    )
}

/// Criterion 3: sinusoid tracking on all three axes.
pub fn tracking() -> CriterionResult {
    let run = run_default(ScenarioKind::Tracking, 1e-3, 10);
    let rms = run.summary.rms_pos_err_final;
    let passed = run.error.is_none() && rms < 0.05;
    CriterionResult::new(
        "3",
        "trajectory tracking",
        passed,
        format!(
            "rms(final 5 s)={rms:.4} m (< 0.05) max={:.4} m{}",
            run.summary.max_pos_err,
            err_note(&run),
        ),
    )
}

/// Criterion 4: roll flip to inverted hover.
pub fn flip() -> CriterionResult {
    let run = run_default(ScenarioKind::Flip, 1e-3, 10);
    let s = &run.summary;
    let ct = s.final_ct;
    let spread =
        ct.iter().cloned().fold(f64::MIN, f64::max) - ct.iter().cloned().fold(f64::MAX, f64::min);
    let all_negative = ct.iter().all(|c| *c < 0.0);
    let passed = run.error.is_none()
        && s.flip_latch_time.is_some_and(|t| t < 1.5)
        && s.flip_max_lateral <= 3.0 * 0.14
        && s.flip_max_vertical <= 3.0 * 0.07
        && s.final_alt_drift < 0.1
        && all_negative
        && spread < 1e-6;
    CriterionResult::new(
        "4",
        "flip maneuver",
        passed,
        format!(
            "latch={} (< 1.5 s) lateral={:.3} m (<= 0.42) vertical={:.3} m (<= 0.21) \
             alt drift={:.4} m (< 0.1) final ct {} spread={spread:.2e}{}",
            s.flip_latch_time
                .map_or("never".into(), |t| format!("{t:.3} s")),
            s.flip_max_lateral,
            s.flip_max_vertical,
            s.final_alt_drift,
            if all_negative {
                "all negative"
            } else {
                "NOT all negative"
            },
            err_note(&run),
        ),
    )
}

/// Criterion 5: flip followed by inverted sinusoid tracking.
pub fn inverted_tracking() -> CriterionResult {
    let run = run_default(ScenarioKind::InvertedTracking, 1e-3, 10);
    let s = &run.summary;
    let rms = s.rms_pos_err_final;
    let all_negative = s.final_ct.iter().all(|c| *c < 0.0);
    let passed = run.error.is_none() && rms < 0.1 && all_negative;
    CriterionResult::new(
        "5",
        "inverted tracking",
        passed,
        format!(
            "rms(final 5 s)={rms:.4} m (< 0.1) final ct {}{}",
            if all_negative {
                "all negative"
            } else {
                "NOT all negative"
            },
            err_note(&run),
        ),
    )
}

fn err_note(run: &SimRun) -> String {
    match &run.error {
        Some(e) => format!(" [run aborted: {e}]"),
        None => String::new(),
    }
}

/// Criterion 6: deterministic property sweeps.
pub fn property_suite() -> Vec<CriterionResult> {
    vec![
        rotor_map_sweep(),
        rotation_orthonormality(),
        frame_equivalence(),
        hover_equilibria(),
        allocation_consistency(),
        rk4_order_check(),
        inner_loop_poles(),
        dt_halving(),
        determinism(),
    ]
}

// --- deterministic RNG -----------------------------------------------------

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64, lo: f64, hi: f64) -> f64 {
    let u = (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

// --- 6a: rotor maps ---------------------------------------------------------

/// Round-trip, residual, and monotonicity of the collective/thrust maps
/// over the full signed collective range.
pub fn rotor_map_sweep() -> CriterionResult {
    let rotor = RotorModel::default();
    let sigma_a = rotor.solidity() * rotor.lift_slope;
    let n = 2001;
    let mut worst_round = 0.0_f64;
    let mut worst_resid = 0.0_f64;
    let mut monotone = true;
    let mut prev_ct = f64::NEG_INFINITY;
    for i in 0..n {
        let theta = -0.35 + 0.70 * i as f64 / (n - 1) as f64;
        let ct = ct_from_collective(theta, &rotor);
        if ct <= prev_ct && i > 0 {
            monotone = false;
        }
        prev_ct = ct;
        let back = collective_from_ct(ct, &rotor);
        worst_round = worst_round.max((back - theta).abs());
        let resid =
            (ct.abs() - 0.5 * sigma_a * (theta.abs() / 3.0 - (ct.abs() / 2.0).sqrt() / 2.0)).abs();
        worst_resid = worst_resid.max(resid);
    }
    let passed = worst_round < 1e-10 && worst_resid < 1e-12 && monotone;
    CriterionResult::new(
        "6a",
        "rotor map sweep",
        passed,
        format!(
            "round-trip={worst_round:.2e} (< 1e-10) residual={worst_resid:.2e} (< 1e-12) \
             monotone={monotone}"
        ),
    )
}

// --- 6b: rotation orthonormality -------------------------------------------

pub fn rotation_orthonormality() -> CriterionResult {
    let mut rng = 0x0123_4567_89AB_CDEF_u64;
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let att = random_attitude(&mut rng);
        let r = rotation_body_to_inertial(&att);
        let gram = r.transpose() * r - Matrix3::identity();
        worst = worst.max(gram.amax());
        worst = worst.max((r.determinant() - 1.0).abs());
    }
    let passed = worst < 1e-14;
    CriterionResult::new(
        "6b",
        "rotation orthonormality",
        passed,
        format!("worst deviation={worst:.2e} (< 1e-14) over 1000 attitudes"),
    )
}

fn random_attitude(rng: &mut u64) -> Vector3<f64> {
    Vector3::new(
        uniform(rng, -std::f64::consts::PI, std::f64::consts::PI),
        uniform(rng, -1.2, 1.2),
        uniform(rng, -std::f64::consts::PI, std::f64::consts::PI),
    )
}

// --- 6c: frame equivalence ---------------------------------------------------

/// The body-frame translational dynamics must agree with the inertial-frame
/// Newton equation: differentiating p_dot = R v gives
/// R v_dot + R_dot v = g e3 + R (0, 0, T/m).
pub fn frame_equivalence() -> CriterionResult {
    let vehicle = VehicleParams::default();
    let mut rng = 0xDEAD_BEEF_CAFE_F00D_u64;
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let s = State12 {
            pos: Vector3::zeros(),
            att: random_attitude(&mut rng),
            vel: Vector3::new(
                uniform(&mut rng, -3.0, 3.0),
                uniform(&mut rng, -3.0, 3.0),
                uniform(&mut rng, -3.0, 3.0),
            ),
            rate: Vector3::new(
                uniform(&mut rng, -6.0, 6.0),
                uniform(&mut rng, -6.0, 6.0),
                uniform(&mut rng, -6.0, 6.0),
            ),
        };
        let thrust = uniform(&mut rng, -26.0, 26.0);
        let wrench = Wrench {
            thrust,
            moment: Vector3::zeros(),
        };
        let ds = state_derivative(&s, &wrench, &vehicle, 1e-9).unwrap();
        let r = rotation_body_to_inertial(&s.att);
        let eta_dot = euler_rates(&s.att, &s.rate, 1e-9).unwrap();
        let r_dot = rotation_rate(&s.att, &eta_dot);

        let accel_body_route = r * ds.vel + r_dot * s.vel;
        let accel_inertial_route = Vector3::new(0.0, 0.0, vehicle.gravity)
            + r * Vector3::new(0.0, 0.0, thrust / vehicle.mass);
        worst = worst.max((accel_body_route - accel_inertial_route).amax());
    }
    let passed = worst < 1e-10;
    CriterionResult::new(
        "6c",
        "frame equivalence",
        passed,
        format!("worst acceleration mismatch={worst:.2e} m/s^2 (< 1e-10) over 1000 states"),
    )
}

/// Time derivative of the body-to-inertial rotation, assembled from the
/// elementary-rotation partial derivatives.
fn rotation_rate(att: &Vector3<f64>, eta_dot: &Vector3<f64>) -> Matrix3<f64> {
    let (sp, cp) = att.x.sin_cos();
    let (st, ct) = att.y.sin_cos();
    let (ss, cs) = att.z.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    let ry = Matrix3::new(ct, 0.0, st, 0.0, 1.0, 0.0, -st, 0.0, ct);
    let rz = Matrix3::new(cs, -ss, 0.0, ss, cs, 0.0, 0.0, 0.0, 1.0);
    let drx = Matrix3::new(0.0, 0.0, 0.0, 0.0, -sp, -cp, 0.0, cp, -sp);
    let dry = Matrix3::new(-st, 0.0, ct, 0.0, 0.0, 0.0, -ct, 0.0, -st);
    let drz = Matrix3::new(-ss, -cs, 0.0, cs, -ss, 0.0, 0.0, 0.0, 0.0);
    rz * ry * drx * eta_dot.x + rz * dry * rx * eta_dot.y + drz * ry * rx * eta_dot.z
}

// --- 6d: hover equilibria ----------------------------------------------------

/// Upright and inverted hover are both exact fixed points of the plant.
pub fn hover_equilibria() -> CriterionResult {
    let vehicle = VehicleParams::default();
    let rotor = RotorModel::default();
    let ct_mag = hover_thrust_coeff(&vehicle, &rotor);
    let mut worst = 0.0_f64;
    for (att, ct) in [
        (Vector3::zeros(), ct_mag),
        (Vector3::new(std::f64::consts::PI, 0.0, 0.0), -ct_mag),
    ] {
        let s = State12 {
            att,
            ..State12::default()
        };
        let wrench = crate::rigid_body::wrench_from_cts(&[ct; 4], &rotor, &vehicle);
        let ds = state_derivative(&s, &wrench, &vehicle, 1e-9).unwrap();
        for v in ds.to_array() {
            worst = worst.max(v.abs());
        }
    }
    let passed = worst < 1e-12;
    CriterionResult::new(
        "6d",
        "hover equilibria",
        passed,
        format!("worst derivative magnitude={worst:.2e} (< 1e-12), upright and inverted"),
    )
}

// --- 6e: allocation consistency ----------------------------------------------

/// Solving the allocation system and multiplying back recovers the
/// requested wrench rates.
pub fn allocation_consistency() -> CriterionResult {
    let ctrl = NdiController::default_setup();
    let mut rng = 0x5151_5151_5151_5151_u64;
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let ct_max = ctrl.ct_max();
        let ct = [
            uniform(&mut rng, -ct_max, ct_max),
            uniform(&mut rng, -ct_max, ct_max),
            uniform(&mut rng, -ct_max, ct_max),
            uniform(&mut rng, -ct_max, ct_max),
        ];
        let demand = [
            uniform(&mut rng, -300.0, 300.0),
            uniform(&mut rng, -20.0, 20.0),
            uniform(&mut rng, -20.0, 20.0),
            uniform(&mut rng, -20.0, 20.0),
        ];
        let flag = if uniform(&mut rng, -1.0, 1.0) < 0.0 {
            -1.0
        } else {
            1.0
        };
        let (b, _) = ctrl.effectiveness(&ct, flag);
        let lu = Lu4::factor(&b).expect("floored allocation matrix is invertible");
        let x = lu.solve(&demand);
        let mut err = 0.0_f64;
        for i in 0..4 {
            let mut acc = 0.0;
            for j in 0..4 {
                acc += b[i][j] * x[j];
            }
            err = err.max((acc - demand[i]).abs());
        }
        let scale = demand.iter().fold(1.0_f64, |m, d| m.max(d.abs()));
        worst = worst.max(err / scale);
    }
    let passed = worst < 1e-9;
    CriterionResult::new(
        "6e",
        "allocation consistency",
        passed,
        format!("worst relative residual={worst:.2e} (< 1e-9) over 1000 systems"),
    )
}

// --- 6f: integrator order ------------------------------------------------------

/// Richardson check: halving the step cuts the torque-free-spin error by
/// about 2^4.
pub fn rk4_order_check() -> CriterionResult {
    let vehicle = VehicleParams::default();
    let wrench = Wrench::default();
    let s0 = State12 {
        att: Vector3::new(0.3, -0.2, 0.4),
        rate: Vector3::new(2.0, 1.5, 1.0),
        ..State12::default()
    };

    let integrate = |h: f64| -> SVector<f64, 12> {
        let mut f = |_t: f64, y: &SVector<f64, 12>| {
            let mut a = [0.0; 12];
            a.copy_from_slice(y.as_slice());
            let s = State12::from_array(&a);
            let ds = state_derivative(&s, &wrench, &vehicle, 1e-9).expect("attitude stays regular");
            Ok::<_, std::convert::Infallible>(SVector::from(ds.to_array()))
        };
        let mut y = SVector::from(s0.to_array());
        let steps = (0.5 / h).round() as usize;
        for i in 0..steps {
            y = rk4_step(&mut f, i as f64 * h, &y, h).unwrap();
        }
        y
    };

    let reference = integrate(1.25e-3);
    let coarse = (integrate(1e-2) - reference).norm();
    let fine = (integrate(5e-3) - reference).norm();
    let ratio = coarse / fine;
    let passed = (8.0..32.0).contains(&ratio) && coarse > 1e-13;
    CriterionResult::new(
        "6f",
        "integrator order",
        passed,
        format!(
            "error ratio under halving={ratio:.2} (want 16 within 2x), coarse error={coarse:.2e}"
        ),
    )
}

// --- 6g: inner-loop pole placement ----------------------------------------------

/// Linearizing the closed attitude loop about hover recovers the designed
/// second-order error dynamics: every attitude-channel eigenvalue keeps a
/// real part at least 80% of the designed damping.
pub fn inner_loop_poles() -> CriterionResult {
    let ctrl = NdiController::default_setup();
    let vehicle = &ctrl.vehicle;
    let inertia = vehicle.inertia;
    let zero = Vector3::zeros();

    // Closed inner loop: attitude and rate states under the moment command,
    // with the outer loop frozen at the hover attitude command.
    let f = |x: &SVector<f64, 6>| -> SVector<f64, 6> {
        let s = State12 {
            att: Vector3::new(x[0], x[1], x[2]),
            rate: Vector3::new(x[3], x[4], x[5]),
            ..State12::default()
        };
        let inner = ctrl
            .attitude_loop(&s, &zero, &zero, &zero)
            .expect("regular attitude");
        let eta_dot = euler_rates(&s.att, &s.rate, 1e-9).unwrap();
        let m = inner.moment_cmd;
        let (p, q, r) = (s.rate.x, s.rate.y, s.rate.z);
        let rate_dot = Vector3::new(
            (m.x + (inertia.y - inertia.z) * q * r) / inertia.x,
            (m.y + (inertia.z - inertia.x) * p * r) / inertia.y,
            (m.z + (inertia.x - inertia.y) * p * q) / inertia.z,
        );
        let mut out = SVector::<f64, 6>::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&eta_dot);
        out.fixed_rows_mut::<3>(3).copy_from(&rate_dot);
        out
    };

    // Central-difference Jacobian at the origin.
    let h = 1e-6;
    let mut jac = DMatrix::<f64>::zeros(6, 6);
    for j in 0..6 {
        let mut xp = SVector::<f64, 6>::zeros();
        let mut xm = SVector::<f64, 6>::zeros();
        xp[j] = h;
        xm[j] = -h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        for i in 0..6 {
            jac[(i, j)] = col[i];
        }
    }
    let eigs = jac.complex_eigenvalues();

    let roll_pitch_bound = -0.8 * ctrl.gains.zeta_att.x * ctrl.gains.omega_att.x;
    let yaw_bound = -0.8 * ctrl.gains.zeta_att.z * ctrl.gains.omega_att.z;
    let mut reals: Vec<f64> = eigs.iter().map(|e| e.re).collect();
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fast_enough = reals.iter().filter(|re| **re <= roll_pitch_bound).count();
    let all_within = reals.iter().all(|re| *re <= yaw_bound);
    let passed = fast_enough >= 4 && all_within;
    CriterionResult::new(
        "6g",
        "inner-loop poles",
        passed,
        format!(
            "eigenvalue real parts {:?} (4 of 6 <= {roll_pitch_bound:.2}, all <= {yaw_bound:.2})",
            reals
                .iter()
                .map(|r| (r * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        ),
    )
}

// --- 6h: step-size convergence ----------------------------------------------------

/// Halving the step leaves every logged plant and actuator value within
/// 1e-6 (relative, floored at unity scale) at matched timestamps, for all
/// scenarios.
pub fn dt_halving() -> CriterionResult {
    let mut worst = 0.0_f64;
    let mut worst_case = String::new();
    let mut worst_settled = 0.0_f64;
    for kind in ScenarioKind::ALL {
        let coarse = run_default(kind, 1e-3, 10);
        let fine = run_default(kind, 5e-4, 20);
        if coarse.error.is_some() || fine.error.is_some() {
            return CriterionResult::new(
                "6h",
                "step-size convergence",
                false,
                format!("{} aborted during refinement", kind.name()),
            );
        }
        let n = coarse.frames.len().min(fine.frames.len());
        for i in 0..n {
            let (a, b) = (&coarse.frames[i], &fine.frames[i]);
            let mut values_a = a.state.to_array().to_vec();
            values_a.extend_from_slice(&a.ct);
            let mut values_b = b.state.to_array().to_vec();
            values_b.extend_from_slice(&b.ct);
            for (va, vb) in values_a.iter().zip(&values_b) {
                let scale = va.abs().max(vb.abs()).max(1.0);
                let rel = (va - vb).abs() / scale;
                if rel > worst {
                    worst = rel;
                    worst_case = format!("{} t={:.2}", kind.name(), a.t);
                }
                // Final tenth of the run, after transients have decayed.
                if i >= n - n / 10 && rel > worst_settled {
                    worst_settled = rel;
                }
            }
        }
    }
    let passed = worst < 1e-6;
    CriterionResult::new(
        "6h",
        "step-size convergence",
        passed,
        format!(
            "worst matched-frame deviation={worst:.2e} (< 1e-6) at {worst_case}; \
             final-10% deviation={worst_settled:.2e}"
        ),
    )
}

// --- 6i: determinism ------------------------------------------------------------------

/// Identical configuration produces byte-identical telemetry.
pub fn determinism() -> CriterionResult {
    let render = || {
        let run = run_default(ScenarioKind::Stabilization, 1e-3, 10);
        let mut buf = Vec::new();
        write_csv(&mut buf, &run.frames).expect("in-memory write");
        buf
    };
    let first = render();
    let second = render();
    let passed = first == second;
    CriterionResult::new(
        "6i",
        "determinism",
        passed,
        format!(
            "two identical runs, {} bytes each: {}",
            first.len(),
            if passed { "byte-identical" } else { "DIFFER" }
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = 42u64;
        let mut b = 42u64;
        for _ in 0..10 {
            assert_eq!(splitmix64(&mut a), splitmix64(&mut b));
        }
        let u = uniform(&mut a, -1.0, 1.0);
        assert!((-1.0..1.0).contains(&u));
    }

    #[test]
    fn render_line_marks_failures() {
        let r = CriterionResult::new("9z", "demo", false, "details".into());
        let line = render_line(&r);
        assert!(line.starts_with("[FAIL]"));
        assert!(line.contains("9z demo"));
    }

    #[test]
    fn scenario_for_covers_every_kind() {
        for kind in ScenarioKind::ALL {
            let sc = scenario_for(kind);
            assert_eq!(sc.name, kind.name());
            assert!(sc.duration > 0.0);
        }
    }

    #[test]
    fn trim_criterion_passes() {
        let r = hover_trim();
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn rotation_and_frame_sweeps_pass() {
        for r in [
            rotor_map_sweep(),
            rotation_orthonormality(),
            frame_equivalence(),
            hover_equilibria(),
            allocation_consistency(),
        ] {
            assert!(r.passed, "{}", render_line(&r));
        }
    }
}
