//! Run telemetry: per-step frames and their CSV serialization.
//!
//! One frame holds everything an analysis of a run needs at one instant:
//! the full rigid-body state, the virtual actuator states and blade
//! collectives they imply, the commands of the outer loop, the realized
//! wrench, the orientation-regime bookkeeping, and cumulative event counts.
//! Floats are written with nine significant digits, which round-trips the
//! physically meaningful part of f64 values while keeping files readable.

use crate::control::EventCounters;
use crate::rigid_body::{State12, Wrench};
use nalgebra::Vector3;
use std::io::{self, Write};

/// One telemetry sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    /// Simulation time [s].
    pub t: f64,
    /// Rigid-body state.
    pub state: State12,
    /// Per-rotor thrust coefficients.
    pub ct: [f64; 4],
    /// Per-rotor blade collectives [rad].
    pub collective: [f64; 4],
    /// Realized rotor wrench.
    pub wrench: Wrench,
    /// Commanded signed thrust [N].
    pub thrust_cmd: f64,
    /// Commanded attitude (roll, pitch, yaw) [rad].
    pub att_cmd: Vector3<f64>,
    /// Reference position being tracked [m].
    pub ref_pos: Vector3<f64>,
    /// Orientation sign of the thrust inversion.
    pub flag: f64,
    /// Roll flip latched complete.
    pub flip: bool,
    /// Commanded orientation (+1 upright, -1 inverted).
    pub sigma_cmd: f64,
    /// Outer loop fell back to the held attitude this step.
    pub degenerate: bool,
    /// Cumulative event counts up to this step.
    pub counters: EventCounters,
}

/// CSV header written by [`write_csv`]; units are embedded in the names.
pub const CSV_HEADER: &str = "t_s,x_m,y_m,z_m,alt_m,\
roll_rad,pitch_rad,yaw_rad,roll_deg,pitch_deg,yaw_deg,\
u_mps,v_mps,w_mps,p_radps,q_radps,r_radps,\
ct1,ct2,ct3,ct4,\
coll1_rad,coll2_rad,coll3_rad,coll4_rad,\
coll1_deg,coll2_deg,coll3_deg,coll4_deg,\
thrust_N,roll_moment_Nm,pitch_moment_Nm,yaw_moment_Nm,\
thrust_cmd_N,roll_cmd_rad,pitch_cmd_rad,yaw_cmd_rad,\
roll_cmd_deg,pitch_cmd_deg,yaw_cmd_deg,\
ref_x_m,ref_y_m,ref_z_m,\
flag,flip,sigma_cmd,degenerate,\
ct_clamp_events,demand_clamp_events,alloc_floor_events,degenerate_thrust_events";

/// Number of columns in the CSV layout.
pub const CSV_COLUMNS: usize = 51;

fn push_float(line: &mut String, value: f64) {
    use std::fmt::Write as _;
    let _ = write!(line, ",{value:.8e}");
}

/// Formats one frame as a CSV record (no trailing newline).
pub fn format_record(f: &Frame) -> String {
    use std::fmt::Write as _;
    let mut line = format!("{:.8e}", f.t);
    let s = &f.state;
    for v in [s.pos.x, s.pos.y, s.pos.z, s.altitude()] {
        push_float(&mut line, v);
    }
    for v in [s.att.x, s.att.y, s.att.z] {
        push_float(&mut line, v);
    }
    for v in [s.att.x, s.att.y, s.att.z] {
        push_float(&mut line, v.to_degrees());
    }
    for v in [s.vel.x, s.vel.y, s.vel.z, s.rate.x, s.rate.y, s.rate.z] {
        push_float(&mut line, v);
    }
    for v in f.ct {
        push_float(&mut line, v);
    }
    for v in f.collective {
        push_float(&mut line, v);
    }
    for v in f.collective {
        push_float(&mut line, v.to_degrees());
    }
    for v in [
        f.wrench.thrust,
        f.wrench.moment.x,
        f.wrench.moment.y,
        f.wrench.moment.z,
        f.thrust_cmd,
        f.att_cmd.x,
        f.att_cmd.y,
        f.att_cmd.z,
        f.att_cmd.x.to_degrees(),
        f.att_cmd.y.to_degrees(),
        f.att_cmd.z.to_degrees(),
        f.ref_pos.x,
        f.ref_pos.y,
        f.ref_pos.z,
    ] {
        push_float(&mut line, v);
    }
    let _ = write!(
        line,
        ",{},{},{},{},{},{},{},{}",
        f.flag as i64,
        i64::from(f.flip),
        f.sigma_cmd as i64,
        i64::from(f.degenerate),
        f.counters.ct_clamp,
        f.counters.demand_clamp,
        f.counters.alloc_floor,
        f.counters.degenerate_thrust,
    );
    line
}

/// Writes the header and all frames as CSV.
pub fn write_csv<W: Write>(mut out: W, frames: &[Frame]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for frame in frames {
        writeln!(out, "{}", format_record(frame))?;
    }
    Ok(())
}
