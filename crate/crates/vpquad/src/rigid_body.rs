//! Six-degree-of-freedom rigid-body model of the quadrotor airframe.
//!
//! Frames and conventions:
//! - Inertial axes: x north, y east, z **down**; altitude is `-z`.
//! - Body axes: x forward, y right, z down, attitude as Z-Y-X
//!   (yaw-pitch-roll) Euler angles.
//! - Translational velocity is carried in body axes, angular velocity as
//!   body rates (p, q, r).
//!
//! Rotor layout, viewed from above with x up (each axis offset by the arm
//! length along both x and y): rotor 1 front-left, 2 front-right, 3
//! aft-right, 4 aft-left. Rotors 1 and 3 spin so their drag reaction torques
//! the body about +z; rotors 2 and 4 oppose them. Positive collective drives
//! thrust along -z (out the roof); negative collective reverses it, which is
//! what sustains inverted flight.

use crate::error::{DynamicsError, ValidationError};
use crate::rotor::{cq_from_ct, RotorModel};
use nalgebra::{Matrix3, Vector3};

/// Rigid-body mass properties and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Vehicle mass [kg].
    pub mass: f64,
    /// Principal moments of inertia (Ixx, Iyy, Izz) [kg m^2].
    pub inertia: Vector3<f64>,
    /// Distance from the center of mass to each rotor axis along both body
    /// x and y [m].
    pub arm: f64,
    /// Gravitational acceleration [m/s^2].
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1.34,
            inertia: Vector3::new(1.0e-3, 1.0e-3, 2.0e-3),
            arm: 0.3,
            gravity: 9.81,
        }
    }
}

impl VehicleParams {
    /// Checks the physical invariants of the parameter set.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let fields = [
            ("vehicle.mass", self.mass),
            ("vehicle.ixx", self.inertia.x),
            ("vehicle.iyy", self.inertia.y),
            ("vehicle.izz", self.inertia.z),
            ("vehicle.arm", self.arm),
            ("vehicle.gravity", self.gravity),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ValidationError::new(
                    field,
                    format!("must be strictly positive and finite, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Twelve-dimensional rigid-body state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State12 {
    /// Inertial position (x, y, z) [m]; z points down.
    pub pos: Vector3<f64>,
    /// Euler angles (roll, pitch, yaw) [rad].
    pub att: Vector3<f64>,
    /// Body-axis velocity (u, v, w) [m/s].
    pub vel: Vector3<f64>,
    /// Body rates (p, q, r) [rad/s].
    pub rate: Vector3<f64>,
}

impl State12 {
    pub fn roll(&self) -> f64 {
        self.att.x
    }

    pub fn pitch(&self) -> f64 {
        self.att.y
    }

    pub fn yaw(&self) -> f64 {
        self.att.z
    }

    /// Altitude above the origin [m] (positive up).
    pub fn altitude(&self) -> f64 {
        -self.pos.z
    }

    /// Flattens to `[x, y, z, roll, pitch, yaw, u, v, w, p, q, r]`.
    pub fn to_array(self) -> [f64; 12] {
        [
            self.pos.x,
            self.pos.y,
            self.pos.z,
            self.att.x,
            self.att.y,
            self.att.z,
            self.vel.x,
            self.vel.y,
            self.vel.z,
            self.rate.x,
            self.rate.y,
            self.rate.z,
        ]
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        Self {
            pos: Vector3::new(a[0], a[1], a[2]),
            att: Vector3::new(a[3], a[4], a[5]),
            vel: Vector3::new(a[6], a[7], a[8]),
            rate: Vector3::new(a[9], a[10], a[11]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Net body-frame force/moment produced by the rotor set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    /// Signed force along body z [N]. Negative lifts an upright vehicle
    /// (body z points down); positive lifts an inverted one.
    pub thrust: f64,
    /// Body moments (roll, pitch, yaw) [N m].
    pub moment: Vector3<f64>,
}

/// Direction-cosine matrix from body to inertial axes for Z-Y-X Euler angles.
pub fn rotation_body_to_inertial(att: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = att.x.sin_cos();
    let (sth, cth) = att.y.sin_cos();
    let (spsi, cpsi) = att.z.sin_cos();
    Matrix3::new(
        cth * cpsi,
        sphi * sth * cpsi - cphi * spsi,
        cphi * sth * cpsi + sphi * spsi,
        cth * spsi,
        sphi * sth * spsi + cphi * cpsi,
        cphi * sth * spsi - sphi * cpsi,
        -sth,
        sphi * cth,
        cphi * cth,
    )
}

/// Matrix mapping Euler-angle rates to body rates: `[p, q, r] = W * att_dot`.
pub fn euler_rate_matrix(att: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = att.x.sin_cos();
    let (sth, cth) = att.y.sin_cos();
    Matrix3::new(
        1.0,
        0.0,
        -sth, //
        0.0,
        cphi,
        sphi * cth, //
        0.0,
        -sphi,
        cphi * cth,
    )
}

/// Time derivative of [`euler_rate_matrix`] along the motion `att_dot`.
pub fn euler_rate_matrix_dot(att: &Vector3<f64>, att_dot: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = att.x.sin_cos();
    let (sth, cth) = att.y.sin_cos();
    let (phid, thd) = (att_dot.x, att_dot.y);
    Matrix3::new(
        0.0,
        0.0,
        -cth * thd,
        0.0,
        -sphi * phid,
        cphi * cth * phid - sphi * sth * thd,
        0.0,
        -cphi * phid,
        -sphi * cth * phid - cphi * sth * thd,
    )
}

/// Euler-angle rates implied by the body rates at the given attitude.
///
/// Fails when the pitch angle is within `eps` of ±90°, where the Euler
/// kinematics lose rank.
pub fn euler_rates(
    att: &Vector3<f64>,
    rate: &Vector3<f64>,
    eps: f64,
) -> Result<Vector3<f64>, DynamicsError> {
    let (sphi, cphi) = att.x.sin_cos();
    let cth = att.y.cos();
    if cth.abs() < eps {
        return Err(DynamicsError::SingularAttitude {
            cos_pitch: cth.abs(),
            limit: eps,
        });
    }
    let (p, q, r) = (rate.x, rate.y, rate.z);
    let sway = q * sphi + r * cphi;
    Ok(Vector3::new(
        p + att.y.tan() * sway,
        q * cphi - r * sphi,
        sway / cth,
    ))
}

/// Net wrench produced by the four rotors at thrust coefficients `cts`.
///
/// Thrust is the signed sum along body z. Roll/pitch moments follow from the
/// rotor positions; the yaw moment is the alternating sum of the shaft drag
/// torques (the profile-drag floors cancel in the alternating pattern, so yaw
/// authority comes entirely from the induced part).
pub fn wrench_from_cts(cts: &[f64; 4], rotor: &RotorModel, vehicle: &VehicleParams) -> Wrench {
    let k = rotor.thrust_gain();
    let dk = vehicle.arm * k;
    let torque = rotor.torque_gain();
    let [c1, c2, c3, c4] = *cts;
    Wrench {
        thrust: -k * (c1 + c2 + c3 + c4),
        moment: Vector3::new(
            dk * (c1 - c2 - c3 + c4),
            dk * (c1 + c2 - c3 - c4),
            torque
                * (cq_from_ct(c1, rotor) - cq_from_ct(c2, rotor) + cq_from_ct(c3, rotor)
                    - cq_from_ct(c4, rotor)),
        ),
    }
}

/// Right-hand side of the rigid-body equations of motion.
///
/// The returned `State12` holds the time derivative of each field. Gravity is
/// resolved into body axes through the current attitude; the thrust enters
/// the body-z force balance directly, so no orientation bookkeeping is needed
/// here — the sign of the wrench already encodes it.
pub fn state_derivative(
    s: &State12,
    w: &Wrench,
    vehicle: &VehicleParams,
    eps: f64,
) -> Result<State12, DynamicsError> {
    let rot = rotation_body_to_inertial(&s.att);
    let att_dot = euler_rates(&s.att, &s.rate, eps)?;
    let grav_body = rot.transpose() * Vector3::new(0.0, 0.0, vehicle.gravity);
    let (u, v, wv) = (s.vel.x, s.vel.y, s.vel.z);
    let (p, q, r) = (s.rate.x, s.rate.y, s.rate.z);
    let vel_dot = Vector3::new(
        r * v - q * wv + grav_body.x,
        p * wv - r * u + grav_body.y,
        q * u - p * v + grav_body.z + w.thrust / vehicle.mass,
    );
    let (ixx, iyy, izz) = (vehicle.inertia.x, vehicle.inertia.y, vehicle.inertia.z);
    let rate_dot = Vector3::new(
        ((iyy - izz) * q * r + w.moment.x) / ixx,
        ((izz - ixx) * p * r + w.moment.y) / iyy,
        ((ixx - iyy) * p * q + w.moment.z) / izz,
    );
    Ok(State12 {
        pos: rot * s.vel,
        att: att_dot,
        vel: vel_dot,
        rate: rate_dot,
    })
}

/// Per-rotor thrust coefficient that exactly carries the vehicle weight in
/// level hover (upright: positive; negate for inverted hover).
pub fn hover_thrust_coeff(vehicle: &VehicleParams, rotor: &RotorModel) -> f64 {
    vehicle.mass * vehicle.gravity / (4.0 * rotor.thrust_gain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const EPS: f64 = 1e-6;

    fn default_pair() -> (VehicleParams, RotorModel) {
        (VehicleParams::default(), RotorModel::default())
    }

    /// Independent construction of the DCM from elementary axis rotations,
    /// used as an oracle for the closed-form matrix.
    fn dcm_from_elementary(att: &Vector3<f64>) -> Matrix3<f64> {
        let rx = Matrix3::new(
            1.0,
            0.0,
            0.0,
            0.0,
            att.x.cos(),
            -att.x.sin(),
            0.0,
            att.x.sin(),
            att.x.cos(),
        );
        let ry = Matrix3::new(
            att.y.cos(),
            0.0,
            att.y.sin(),
            0.0,
            1.0,
            0.0,
            -att.y.sin(),
            0.0,
            att.y.cos(),
        );
        let rz = Matrix3::new(
            att.z.cos(),
            -att.z.sin(),
            0.0,
            att.z.sin(),
            att.z.cos(),
            0.0,
            0.0,
            0.0,
            1.0,
        );
        rz * ry * rx
    }

    #[test]
    fn rotation_matches_elementary_composition() {
        let att = Vector3::new(0.4, -0.7, 1.9);
        let closed = rotation_body_to_inertial(&att);
        let oracle = dcm_from_elementary(&att);
        assert_relative_eq!(closed, oracle, epsilon = 1e-14);
    }

    #[test]
    fn upright_hover_is_an_equilibrium() {
        let (veh, rotor) = default_pair();
        let ct = hover_thrust_coeff(&veh, &rotor);
        let s = State12::default();
        let w = wrench_from_cts(&[ct; 4], &rotor, &veh);
        let ds = state_derivative(&s, &w, &veh, EPS).unwrap();
        for (i, v) in ds.to_array().iter().enumerate() {
            assert!(v.abs() < 1e-12, "derivative {i} = {v}");
        }
        assert_relative_eq!(w.thrust, -veh.mass * veh.gravity, max_relative = 1e-14);
    }

    #[test]
    fn inverted_hover_is_an_equilibrium() {
        let (veh, rotor) = default_pair();
        let ct = -hover_thrust_coeff(&veh, &rotor);
        let s = State12 {
            att: Vector3::new(PI, 0.0, 0.0),
            ..State12::default()
        };
        let w = wrench_from_cts(&[ct; 4], &rotor, &veh);
        let ds = state_derivative(&s, &w, &veh, EPS).unwrap();
        for (i, v) in ds.to_array().iter().enumerate() {
            assert!(v.abs() < 1e-12, "derivative {i} = {v}");
        }
        assert_relative_eq!(w.thrust, veh.mass * veh.gravity, max_relative = 1e-14);
    }

    #[test]
    fn zero_collective_free_falls_with_zero_yaw_torque() {
        let (veh, rotor) = default_pair();
        let w = wrench_from_cts(&[0.0; 4], &rotor, &veh);
        assert_eq!(w.thrust, 0.0);
        // Profile-drag torques cancel in the alternating spin pattern.
        assert_eq!(w.moment, Vector3::zeros());
        let s = State12::default();
        let ds = state_derivative(&s, &w, &veh, EPS).unwrap();
        assert_relative_eq!(ds.vel.z, veh.gravity, max_relative = 1e-15);
    }

    #[test]
    fn wrench_signs_follow_rotor_layout() {
        let (veh, rotor) = default_pair();
        let base = 0.01;
        let bump = 0.002;
        // Extra collective on rotor 1 (front-left, y = -arm): extra force
        // along -z on the left side is a positive moment about body x, and
        // being forward of the c.g. it also pitches the nose up (+y moment).
        // Rotor 1 is in the +z drag-reaction spin group, so yaw goes
        // positive too.
        let w1 = wrench_from_cts(&[base + bump, base, base, base], &rotor, &veh);
        assert!(w1.moment.x > 0.0 && w1.moment.y > 0.0 && w1.moment.z > 0.0);
        // Rotor 3 (aft-right): negative roll and pitch, positive yaw.
        let w3 = wrench_from_cts(&[base, base, base + bump, base], &rotor, &veh);
        assert!(w3.moment.x < 0.0 && w3.moment.y < 0.0 && w3.moment.z > 0.0);
        // Both add the same extra lift.
        assert_relative_eq!(w1.thrust, w3.thrust, max_relative = 1e-14);
        let k = rotor.thrust_gain();
        assert_relative_eq!(w1.thrust, -k * (4.0 * base + bump), max_relative = 1e-14);
        assert_relative_eq!(w1.moment.x, veh.arm * k * bump, max_relative = 1e-14);
    }

    #[test]
    fn opposed_pairs_produce_no_net_wrench() {
        // Equal-magnitude, opposite-sign coefficients on the two spin groups:
        // thrust cancels, roll/pitch cancel by geometry, and the drag torques
        // (even in ct) cancel in the alternating sum as well.
        let (veh, rotor) = default_pair();
        let c = 0.012;
        let w = wrench_from_cts(&[c, -c, c, -c], &rotor, &veh);
        assert!(w.thrust.abs() < 1e-15);
        assert!(w.moment.norm() < 1e-15);
    }

    #[test]
    fn differential_collective_is_pure_yaw() {
        let (veh, rotor) = default_pair();
        let (c, d) = (0.01, 0.002);
        let w = wrench_from_cts(&[c + d, c - d, c + d, c - d], &rotor, &veh);
        let hover = wrench_from_cts(&[c; 4], &rotor, &veh);
        assert_relative_eq!(w.thrust, hover.thrust, max_relative = 1e-14);
        assert!(w.moment.x.abs() < 1e-15 && w.moment.y.abs() < 1e-15);
        let expected = rotor.torque_gain() * 2.0 * ((c + d).powf(1.5) - (c - d).powf(1.5))
            / std::f64::consts::SQRT_2;
        assert_relative_eq!(w.moment.z, expected, max_relative = 1e-13);
    }

    #[test]
    fn euler_rates_reduce_to_body_rates_at_level_attitude() {
        let att = Vector3::zeros();
        let rate = Vector3::new(0.3, -0.2, 0.5);
        let rates = euler_rates(&att, &rate, EPS).unwrap();
        assert_relative_eq!(rates, rate, epsilon = 1e-15);
    }

    #[test]
    fn euler_rates_invert_the_rate_matrix() {
        let att = Vector3::new(0.6, -0.4, 2.0);
        let rate = Vector3::new(1.2, -0.8, 0.3);
        let att_dot = euler_rates(&att, &rate, EPS).unwrap();
        let back = euler_rate_matrix(&att) * att_dot;
        assert_relative_eq!(back, rate, epsilon = 1e-13);
    }

    #[test]
    fn euler_rates_fail_near_gimbal_lock() {
        let att = Vector3::new(0.0, FRAC_PI_2 - 1e-9, 0.0);
        let rate = Vector3::new(0.0, 0.0, 1.0);
        assert!(euler_rates(&att, &rate, EPS).is_err());
    }

    #[test]
    fn rate_matrix_derivative_matches_finite_differences() {
        let att = Vector3::new(0.5, -0.3, 1.1);
        let att_dot = Vector3::new(0.7, 0.2, -0.4);
        let h = 1e-6;
        let plus = euler_rate_matrix(&(att + att_dot * h));
        let minus = euler_rate_matrix(&(att - att_dot * h));
        let numeric = (plus - minus) / (2.0 * h);
        let analytic = euler_rate_matrix_dot(&att, &att_dot);
        assert_relative_eq!(analytic, numeric, epsilon = 1e-8);
    }

    #[test]
    fn gyroscopic_coupling_signs() {
        let (veh, _) = default_pair();
        let s = State12 {
            rate: Vector3::new(2.0, 0.0, 3.0),
            ..State12::default()
        };
        let w = Wrench::default();
        let ds = state_derivative(&s, &w, &veh, EPS).unwrap();
        // Izz > Ixx = Iyy: spin about x and z couples into pitch.
        let expected_qdot = (veh.inertia.z - veh.inertia.x) / veh.inertia.y * 2.0 * 3.0;
        assert_relative_eq!(ds.rate.y, expected_qdot, max_relative = 1e-14);
        assert_eq!(ds.rate.x, 0.0);
        assert_eq!(ds.rate.z, 0.0);
    }

    #[test]
    fn trim_thrust_coefficient_balances_weight() {
        let (veh, rotor) = default_pair();
        let ct = hover_thrust_coeff(&veh, &rotor);
        assert_relative_eq!(ct, 0.010_178_557_060_829_938, max_relative = 1e-12);
        assert!((4.0 * rotor.thrust_gain() * ct - veh.mass * veh.gravity).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rotation_is_orthonormal(
            phi in -PI..PI,
            theta in -1.5f64..1.5,
            psi in -PI..PI,
        ) {
            let r = rotation_body_to_inertial(&Vector3::new(phi, theta, psi));
            let gram = r.transpose() * r;
            let err = (gram - Matrix3::identity()).abs().max();
            prop_assert!(err < 1e-14, "orthonormality error {err}");
            prop_assert!((r.determinant() - 1.0).abs() < 1e-13);
        }

        #[test]
        fn rate_round_trip(
            phi in -3.0f64..3.0,
            theta in -1.2f64..1.2,
            psi in -PI..PI,
            p in -10.0f64..10.0,
            q in -10.0f64..10.0,
            r in -10.0f64..10.0,
        ) {
            let att = Vector3::new(phi, theta, psi);
            let rate = Vector3::new(p, q, r);
            let att_dot = euler_rates(&att, &rate, EPS).unwrap();
            let back = euler_rate_matrix(&att) * att_dot;
            prop_assert!((back - rate).norm() < 1e-9 * rate.norm().max(1.0));
        }
    }
}
