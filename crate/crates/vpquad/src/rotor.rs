//! Blade-element/momentum aerodynamics of a constant-speed, variable-pitch rotor.
//!
//! Thrust and shaft torque are carried as dimensionless coefficients,
//! normalized by `rho * A * Vtip^2` (and additionally by the radius for
//! torque). The only input is the blade collective pitch; rotor speed is
//! assumed to be held constant by a speed governor, so control bandwidth is
//! set by the pitch actuators rather than by motor spin-up.
//!
//! Negative collective produces negative thrust, which is what allows
//! sustained inverted flight. The momentum-theory maps below are extended to
//! negative inputs by odd symmetry: a rotor at collective `-c` mirrors the
//! downwash geometry of one at `+c`, so `ct(-c) = -ct(c)` exactly, while the
//! torque magnitude is even in the thrust coefficient (drag on the blades
//! always opposes the spin direction).

use crate::error::ValidationError;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Geometric and aerodynamic description of one rotor, plus ambient density.
///
/// All four rotors of the vehicle are assumed identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotorModel {
    /// Blade radius [m].
    pub radius: f64,
    /// Blade chord [m].
    pub chord: f64,
    /// Number of blades per rotor.
    pub blade_count: u32,
    /// Blade lift-curve slope [1/rad].
    pub lift_slope: f64,
    /// Blade profile (zero-lift) drag coefficient.
    pub profile_drag: f64,
    /// Rotor angular speed [rad/s], constant in flight.
    pub omega: f64,
    /// Air density [kg/m^3].
    pub air_density: f64,
}

impl Default for RotorModel {
    fn default() -> Self {
        Self {
            radius: 0.18,
            chord: 0.03,
            blade_count: 2,
            lift_slope: 5.23,
            profile_drag: 0.01,
            omega: 282.7,
            air_density: 1.225,
        }
    }
}

impl RotorModel {
    /// Builds a rotor model, rejecting non-physical parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        radius: f64,
        chord: f64,
        blade_count: u32,
        lift_slope: f64,
        profile_drag: f64,
        omega: f64,
        air_density: f64,
    ) -> Result<Self, ValidationError> {
        let model = Self {
            radius,
            chord,
            blade_count,
            lift_slope,
            profile_drag,
            omega,
            air_density,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the physical invariants of the parameter set.
    pub fn validate(&self) -> Result<(), ValidationError> {
        strictly_positive("rotor.radius", self.radius)?;
        strictly_positive("rotor.chord", self.chord)?;
        strictly_positive("rotor.lift_slope", self.lift_slope)?;
        strictly_positive("rotor.omega", self.omega)?;
        strictly_positive("rotor.air_density", self.air_density)?;
        if self.blade_count < 2 {
            return Err(ValidationError::new(
                "rotor.blade_count",
                format!("must be at least 2, got {}", self.blade_count),
            ));
        }
        if !(self.profile_drag.is_finite() && self.profile_drag >= 0.0) {
            return Err(ValidationError::new(
                "rotor.profile_drag",
                format!("must be non-negative, got {}", self.profile_drag),
            ));
        }
        Ok(())
    }

    /// Rotor solidity: blade area over disk area.
    pub fn solidity(&self) -> f64 {
        f64::from(self.blade_count) * self.chord / (PI * self.radius)
    }

    /// Disk area [m^2].
    pub fn disk_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Blade tip speed [m/s].
    pub fn tip_speed(&self) -> f64 {
        self.omega * self.radius
    }

    /// Dimensional thrust scale `rho * A * Vtip^2` [N].
    ///
    /// Thrust of one rotor is this scale times its thrust coefficient.
    pub fn thrust_gain(&self) -> f64 {
        let vt = self.tip_speed();
        self.air_density * self.disk_area() * vt * vt
    }

    /// Dimensional torque scale [N m]: the thrust scale times the radius.
    pub fn torque_gain(&self) -> f64 {
        self.thrust_gain() * self.radius
    }
}

fn strictly_positive(field: &'static str, value: f64) -> Result<(), ValidationError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ValidationError::new(
            field,
            format!("must be strictly positive and finite, got {value}"),
        ))
    }
}

/// Momentum-theory induced-inflow ratio at thrust coefficient `ct`.
///
/// For a hovering rotor the induced velocity over tip speed is
/// `sqrt(ct / 2)`; negative thrust mirrors to negative inflow.
pub fn inflow_ratio(ct: f64) -> f64 {
    let mag = (ct.abs() / 2.0).sqrt();
    if ct < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Thrust coefficient produced by a blade collective pitch [rad].
///
/// Solves the blade-element/momentum fixed point
/// `ct = (sigma * a / 2) * (collective / 3 - lambda / 2)` with
/// `lambda = sqrt(ct / 2)` in closed form: substituting `s = sqrt(ct)`
/// turns the relation into a quadratic in `s` whose positive root is taken.
/// Negative collective maps by odd symmetry.
pub fn ct_from_collective(collective: f64, rotor: &RotorModel) -> f64 {
    let mag = collective.abs();
    let sa = rotor.solidity() * rotor.lift_slope;
    let lin = sa / 6.0;
    let ind = sa / (4.0 * SQRT_2);
    let s = 0.5 * (-ind + (ind * ind + 4.0 * lin * mag).sqrt());
    let ct = s * s;
    if collective < 0.0 {
        -ct
    } else {
        ct
    }
}

/// Blade collective pitch [rad] that produces thrust coefficient `ct`.
///
/// Exact inverse of [`ct_from_collective`]:
/// `collective = 6 ct / (sigma * a) + 1.5 * sqrt(ct / 2)`,
/// odd-extended to negative coefficients.
pub fn collective_from_ct(ct: f64, rotor: &RotorModel) -> f64 {
    let mag = ct.abs();
    let sa = rotor.solidity() * rotor.lift_slope;
    let collective = 6.0 * mag / sa + 1.5 * (mag / 2.0).sqrt();
    if ct < 0.0 {
        -collective
    } else {
        collective
    }
}

/// Shaft torque coefficient at thrust coefficient `ct`.
///
/// Sum of induced torque, `|ct|^1.5 / sqrt(2)`, and the profile-drag floor
/// `sigma * cd0 / 8` that persists even at zero thrust. Torque magnitude is
/// even in `ct`: blade drag always opposes the spin direction.
pub fn cq_from_ct(ct: f64, rotor: &RotorModel) -> f64 {
    ct.abs().powf(1.5) / SQRT_2 + rotor.solidity() * rotor.profile_drag / 8.0
}

/// Dimensional thrust [N] and shaft torque magnitude [N m] for one rotor.
pub fn dimensionalize(ct: f64, cq: f64, rotor: &RotorModel) -> (f64, f64) {
    (rotor.thrust_gain() * ct, rotor.torque_gain() * cq)
}

/// Complete operating point of one rotor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorCommand {
    /// Blade collective pitch [rad].
    pub collective: f64,
    /// Thrust coefficient.
    pub thrust_coeff: f64,
    /// Shaft torque coefficient (non-negative).
    pub torque_coeff: f64,
    /// Induced inflow ratio.
    pub inflow: f64,
}

impl RotorCommand {
    /// Operating point reached at the given thrust coefficient.
    pub fn from_ct(ct: f64, rotor: &RotorModel) -> Self {
        Self {
            collective: collective_from_ct(ct, rotor),
            thrust_coeff: ct,
            torque_coeff: cq_from_ct(ct, rotor),
            inflow: inflow_ratio(ct),
        }
    }

    /// Operating point reached at the given collective pitch [rad].
    pub fn from_collective(collective: f64, rotor: &RotorModel) -> Self {
        Self::from_ct(ct_from_collective(collective, rotor), rotor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Independent oracle for the blade-element/momentum fixed point:
    /// bisection on the residual `f(ct) = ct - (sigma a / 2)(coll/3 - lambda/2)`,
    /// which is continuous and strictly increasing in `ct` for `ct >= 0`.
    fn ct_by_bisection(collective: f64, rotor: &RotorModel) -> f64 {
        assert!(collective >= 0.0);
        let sa = rotor.solidity() * rotor.lift_slope;
        let residual = |ct: f64| ct - 0.5 * sa * (collective / 3.0 - (ct / 2.0).sqrt() / 2.0);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        assert!(residual(lo) <= 0.0 && residual(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn derived_scales_match_frozen_values() {
        let r = RotorModel::default();
        assert_relative_eq!(r.solidity(), 0.106_103_295_394_596_88, max_relative = 1e-14);
        assert_relative_eq!(r.disk_area(), 0.101_787_601_976_309_3, max_relative = 1e-14);
        assert_relative_eq!(r.tip_speed(), 50.886, max_relative = 1e-14);
        assert_relative_eq!(r.thrust_gain(), 322.869_929_436_937_2, max_relative = 1e-13);
        assert_relative_eq!(
            r.torque_gain(),
            322.869_929_436_937_2 * 0.18,
            max_relative = 1e-13
        );
    }

    #[test]
    fn collective_map_matches_bisection_oracle() {
        let r = RotorModel::default();
        for i in 0..=1000 {
            let coll = 0.35 * f64::from(i) / 1000.0;
            let oracle = ct_by_bisection(coll, &r);
            let closed = ct_from_collective(coll, &r);
            assert!(
                (closed - oracle).abs() < 1e-10,
                "collective {coll}: closed form {closed} vs bisection {oracle}"
            );
        }
    }

    #[test]
    fn hover_operating_point_frozen() {
        // Thrust coefficient that carries a quarter of the default vehicle
        // weight (1.34 kg at 9.81 m/s^2), with the collective, inflow, and
        // torque coefficient it implies. Values frozen from the bisection
        // oracle and momentum theory.
        let r = RotorModel::default();
        let ct = 0.010_178_557_060_829_938;
        let coll = collective_from_ct(ct, &r);
        assert_relative_eq!(coll, 0.217_063_041_044_183_34, max_relative = 1e-12);
        assert_relative_eq!(
            coll.to_degrees(),
            12.436_796_140_106_667,
            max_relative = 1e-12
        );
        assert_relative_eq!(ct_from_collective(coll, &r), ct, max_relative = 1e-12);
        assert_relative_eq!(
            inflow_ratio(ct),
            0.071_339_179_490_760_68,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cq_from_ct(ct, &r),
            8.587_590_283_627_424e-4,
            max_relative = 1e-12
        );
        let (thrust, torque) = dimensionalize(ct, cq_from_ct(ct, &r), &r);
        assert_relative_eq!(thrust, 1.34 * 9.81 / 4.0, max_relative = 1e-12);
        assert_relative_eq!(torque, 0.049_908_144_040_346_05, max_relative = 1e-12);
    }

    #[test]
    fn full_collective_thrust_frozen() {
        let r = RotorModel::default();
        assert_relative_eq!(
            ct_from_collective(0.35, &r),
            0.018_888_387_617_901_646,
            max_relative = 1e-12
        );
    }

    #[test]
    fn inflow_examples() {
        assert_eq!(inflow_ratio(0.0), 0.0);
        assert_relative_eq!(inflow_ratio(0.02), 0.1, max_relative = 1e-15);
        assert_relative_eq!(inflow_ratio(-0.02), -0.1, max_relative = 1e-15);
    }

    #[test]
    fn torque_floor_at_zero_thrust() {
        let r = RotorModel::default();
        assert_relative_eq!(
            cq_from_ct(0.0, &r),
            1.326_291_192_432_461e-4,
            max_relative = 1e-12
        );
        // Torque is even in the thrust coefficient.
        assert_eq!(cq_from_ct(0.015, &r), cq_from_ct(-0.015, &r));
    }

    #[test]
    fn odd_symmetry_is_exact() {
        let r = RotorModel::default();
        for i in 1..=100 {
            let coll = 0.35 * f64::from(i) / 100.0;
            assert_eq!(ct_from_collective(-coll, &r), -ct_from_collective(coll, &r));
            let ct = ct_from_collective(coll, &r);
            assert_eq!(collective_from_ct(-ct, &r), -collective_from_ct(ct, &r));
            assert_eq!(inflow_ratio(-ct), -inflow_ratio(ct));
        }
    }

    #[test]
    fn rejects_non_physical_parameters() {
        assert!(RotorModel::new(0.0, 0.03, 2, 5.23, 0.01, 282.7, 1.225).is_err());
        assert!(RotorModel::new(0.18, -0.03, 2, 5.23, 0.01, 282.7, 1.225).is_err());
        assert!(RotorModel::new(0.18, 0.03, 1, 5.23, 0.01, 282.7, 1.225).is_err());
        assert!(RotorModel::new(0.18, 0.03, 2, 5.23, -0.01, 282.7, 1.225).is_err());
        assert!(RotorModel::new(0.18, 0.03, 2, 5.23, 0.01, f64::NAN, 1.225).is_err());
        assert!(RotorModel::new(0.18, 0.03, 2, 5.23, 0.01, 282.7, 1.225).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip_collective(coll in -0.35f64..0.35) {
            let r = RotorModel::default();
            let ct = ct_from_collective(coll, &r);
            let back = collective_from_ct(ct, &r);
            prop_assert!((back - coll).abs() < 1e-10,
                "round trip {coll} -> {ct} -> {back}");
        }

        #[test]
        fn fixed_point_residual(coll in 0.0f64..0.35) {
            let r = RotorModel::default();
            let ct = ct_from_collective(coll, &r);
            let sa = r.solidity() * r.lift_slope;
            let residual = ct - 0.5 * sa * (coll / 3.0 - inflow_ratio(ct) / 2.0);
            prop_assert!(residual.abs() < 1e-12, "residual {residual} at {coll}");
        }

        #[test]
        fn thrust_map_strictly_increasing(
            a in -0.35f64..0.35,
            b in -0.35f64..0.35,
        ) {
            let r = RotorModel::default();
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(ct_from_collective(lo, &r) < ct_from_collective(hi, &r));
        }

        #[test]
        fn torque_grows_with_thrust_magnitude(
            a in 0.0f64..0.018,
            delta in 1e-6f64..0.001,
        ) {
            let r = RotorModel::default();
            prop_assert!(cq_from_ct(a + delta, &r) > cq_from_ct(a, &r));
        }
    }
}
