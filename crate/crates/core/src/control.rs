//! Trajectory-tracking PD controller with a differential-flatness desired
//! attitude.
//!
//! The commanded thrust vector is `t_des = −G_x e_x − G_v e_v + m g e3 +
//! m ẍ_des`; the net thrust is its magnitude and the desired attitude
//! aligns the body z-axis with it (zero desired yaw). The desired angular
//! rate comes from central finite differences of `R_des` at ±1 ms. The
//! moment command is `μ = −G_ω e_ω − G_R e_R` with the rotation error
//! `e_R = ½ vee(R_desᵀR − RᵀR_des)` and rate error `e_ω = ω − ω_des`.
//!
//! Each [`Tracker`] instance carries one piece of state: the last
//! non-degenerate `R_des`, held through the (measure-zero) free-fall
//! singularity where the commanded thrust vanishes.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::sim::{vee_nearest, QuadParams, QuadState, Wrench};
use crate::traj::RefPoint;

/// Diagonal feedback gains (G_x, G_v, G_R, G_ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub gx: Vector3<f64>,
    pub gv: Vector3<f64>,
    pub gr: Vector3<f64>,
    pub gw: Vector3<f64>,
}

impl Gains {
    /// Scalar gains applied uniformly to every axis.
    pub fn uniform(gx: f64, gv: f64, gr: f64, gw: f64) -> Self {
        Self {
            gx: Vector3::repeat(gx),
            gv: Vector3::repeat(gv),
            gr: Vector3::repeat(gr),
            gw: Vector3::repeat(gw),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.gx
            .iter()
            .chain(self.gv.iter())
            .chain(self.gr.iter())
            .chain(self.gw.iter())
            .all(|&g| g > 0.0 && g.is_finite())
    }
}

impl Default for Gains {
    /// (2.00, 0.50, 1.00, 0.03)·I.
    fn default() -> Self {
        Self::uniform(2.0, 0.5, 1.0, 0.03)
    }
}

/// The feedback errors of one control evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateError {
    pub e_x: Vector3<f64>,
    pub e_v: Vector3<f64>,
    pub e_r: Vector3<f64>,
    pub e_omega: Vector3<f64>,
}

/// Rotation error ½ vee(R_desᵀR − RᵀR_des).
pub fn rotation_error(r: &Matrix3<f64>, r_des: &Matrix3<f64>) -> Vector3<f64> {
    0.5 * vee_nearest(&(r_des.transpose() * r - r.transpose() * r_des))
}

/// Spacing of the finite-difference stencil for ω_des, s.
pub const OMEGA_DES_FD_DT: f64 = 1e-3;

/// Per-trajectory tracking controller.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub gains: Gains,
    last_r_des: Matrix3<f64>,
}

impl Tracker {
    pub fn new(gains: Gains) -> Self {
        assert!(gains.is_valid(), "controller gains must be positive");
        Self { gains, last_r_des: Matrix3::identity() }
    }

    /// Commanded thrust vector for a given feedback error and feedforward
    /// acceleration.
    fn thrust_vector(
        &self,
        e_x: &Vector3<f64>,
        e_v: &Vector3<f64>,
        acc_des: &Vector3<f64>,
        p: &QuadParams,
    ) -> Vector3<f64> {
        -self.gains.gx.component_mul(e_x) - self.gains.gv.component_mul(e_v)
            + p.mass * p.gravity * Vector3::z()
            + p.mass * acc_des
    }

    /// Attitude whose body z-axis carries `t_des`, with zero desired yaw:
    /// b3 = t_des/‖t_des‖, b2 = (b3 × e1)/‖·‖, b1 = b2 × b3. Returns
    /// `None` at the singularity (vanishing thrust or b3 ∥ e1).
    fn attitude_from_thrust(t_des: &Vector3<f64>) -> Option<Matrix3<f64>> {
        let norm = t_des.norm();
        if norm <= 1e-6 {
            return None;
        }
        let b3 = t_des / norm;
        let cross = b3.cross(&Vector3::x());
        let cn = cross.norm();
        if cn < 1e-9 {
            return None;
        }
        let b2 = cross / cn;
        let b1 = b2.cross(&b3);
        Some(Matrix3::from_columns(&[b1, b2, b3]))
    }

    /// Desired attitude and angular rate at the middle of a ±`fd_dt`
    /// stencil of reference accelerations. The position/velocity errors
    /// are held fixed across the stencil — only the feedforward term
    /// varies — so ω_des reflects the reference's rotation, not the
    /// instantaneous error dynamics.
    pub fn desired_attitude(
        &mut self,
        acc_prev: &Vector3<f64>,
        acc_now: &Vector3<f64>,
        acc_next: &Vector3<f64>,
        fd_dt: f64,
        e_x: &Vector3<f64>,
        e_v: &Vector3<f64>,
        p: &QuadParams,
    ) -> (Matrix3<f64>, Vector3<f64>) {
        let at = |acc: &Vector3<f64>| {
            Self::attitude_from_thrust(&self.thrust_vector(e_x, e_v, acc, p))
        };
        match (at(acc_prev), at(acc_now), at(acc_next)) {
            (Some(r_prev), Some(r_now), Some(r_next)) => {
                // Ṙ_des = R_des·hat(ω_des) ⇒ ω_des = vee(R_desᵀ Ṙ_des).
                let dr = (r_next - r_prev) / (2.0 * fd_dt);
                let omega_des = vee_nearest(&(r_now.transpose() * dr));
                self.last_r_des = r_now;
                (r_now, omega_des)
            }
            _ => (self.last_r_des, Vector3::zeros()),
        }
    }

    /// Full control law from explicit reference samples at t − fd_dt, t,
    /// and t + fd_dt. Returns the commanded (unsaturated) wrench and the
    /// errors it was computed from.
    pub fn control_with_refs(
        &mut self,
        s: &QuadState,
        ref_prev: &RefPoint,
        ref_now: &RefPoint,
        ref_next: &RefPoint,
        fd_dt: f64,
        p: &QuadParams,
    ) -> (Wrench, StateError) {
        let e_x = s.x - ref_now.pos;
        let e_v = s.v - ref_now.vel;
        let t_des = self.thrust_vector(&e_x, &e_v, &ref_now.acc, p);
        let (r_des, omega_des) = self.desired_attitude(
            &ref_prev.acc,
            &ref_now.acc,
            &ref_next.acc,
            fd_dt,
            &e_x,
            &e_v,
            p,
        );
        let e_r = rotation_error(&s.rot, &r_des);
        let e_omega = s.omega - omega_des;
        let mu = -self.gains.gw.component_mul(&e_omega) - self.gains.gr.component_mul(&e_r);
        (
            Wrench { tau: t_des.norm(), mu },
            StateError { e_x, e_v, e_r, e_omega },
        )
    }

    /// Control at time `t` given a reference function; samples it at
    /// t ± 1 ms for the attitude-rate stencil. `ref_fn` must be defined
    /// on [t − 1 ms, t + 1 ms] (references clamp to hover past t_fin).
    pub fn control_at<F>(&mut self, t: f64, s: &QuadState, ref_fn: F, p: &QuadParams) -> Wrench
    where
        F: Fn(f64) -> RefPoint,
    {
        let d = OMEGA_DES_FD_DT;
        let (u, _) =
            self.control_with_refs(s, &ref_fn(t - d), &ref_fn(t), &ref_fn(t + d), d, p);
        u
    }
}
