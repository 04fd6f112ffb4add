//! High-fidelity quadrotor rigid-body simulation: 12-state dynamics on
//! R³ × R³ × SO(3) × R³, the rotor-speed actuator model with saturation,
//! and two geometric integrators (Lie-Euler and a 4th-order
//! Runge-Kutta/Munthe-Kaas scheme used as a cross-validation oracle).
//!
//! Conventions: world frame z-up, body frame with `R` mapping body to
//! world; `omega` is the body-frame angular velocity. Thrust acts along
//! the body z-axis: `v̇ = (τ/m)·R·e3 − g·e3`.

use std::io::Write as IoWrite;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid quadrotor parameters: {0}")]
    BadParams(String),
    #[error("state became non-finite at t = {t}: {what}")]
    NonFiniteState { t: f64, what: String },
    #[error("csv export failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Physical parameters of the vehicle and its rotors.
///
/// Rotor speeds are expressed in rpm, so `k_tau` has units N/rpm² and
/// `k_mu` N·m/rpm².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    pub mass: f64,
    /// Diagonal of the inertia matrix J = diag(j1, j2, j3), kg·m².
    pub inertia: Vector3<f64>,
    pub k_tau: f64,
    pub k_mu: f64,
    /// Arm length ℓ from the center of mass to each rotor, m.
    pub arm_length: f64,
    /// Minimum rotor speed, rpm. Zero is allowed (motors off); the
    /// default models an idle floor.
    pub rotor_min: f64,
    pub rotor_max: f64,
    pub gravity: f64,
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let pos = [
            ("mass", self.mass),
            ("j1", self.inertia[0]),
            ("j2", self.inertia[1]),
            ("j3", self.inertia[2]),
            ("k_tau", self.k_tau),
            ("k_mu", self.k_mu),
            ("arm_length", self.arm_length),
            ("gravity", self.gravity),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::BadParams(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.rotor_min >= 0.0 && self.rotor_min < self.rotor_max && self.rotor_max.is_finite())
        {
            return Err(SimError::BadParams(format!(
                "need 0 <= rotor_min < rotor_max, got [{}, {}]",
                self.rotor_min, self.rotor_max
            )));
        }
        Ok(())
    }

    /// Largest net thrust the four rotors can produce, N.
    pub fn max_thrust(&self) -> f64 {
        4.0 * self.k_tau * self.rotor_max * self.rotor_max
    }
}

impl Default for QuadParams {
    /// The benchmark vehicle: a 547 g quadrotor with 0.27 m arms.
    fn default() -> Self {
        Self {
            mass: 0.547,
            inertia: Vector3::new(3.3e-3, 3.3e-3, 5.8e-3),
            k_tau: 1.5e-7,
            k_mu: 3.75e-9,
            arm_length: 0.27,
            rotor_min: 1100.0,
            rotor_max: 8600.0,
            gravity: 9.81,
        }
    }
}

/// Net thrust (N, along body z) and body moment (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub tau: f64,
    pub mu: Vector3<f64>,
}

impl Wrench {
    pub fn new(tau: f64, mu: Vector3<f64>) -> Self {
        Self { tau, mu }
    }

    pub fn zero() -> Self {
        Self { tau: 0.0, mu: Vector3::zeros() }
    }

    /// The equilibrium wrench: thrust m·g, zero moment.
    pub fn hover(p: &QuadParams) -> Self {
        Self { tau: p.mass * p.gravity, mu: Vector3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.tau.is_finite() && self.mu.iter().all(|m| m.is_finite())
    }
}

/// Full vehicle state (x, v, ω, R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
    /// Body-frame angular velocity, rad/s.
    pub omega: Vector3<f64>,
    /// Body-to-world rotation.
    pub rot: Matrix3<f64>,
}

impl QuadState {
    /// At rest, level, at the given position.
    pub fn hover_at(x: Vector3<f64>) -> Self {
        Self {
            x,
            v: Vector3::zeros(),
            omega: Vector3::zeros(),
            rot: Matrix3::identity(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|c| c.is_finite())
            && self.v.iter().all(|c| c.is_finite())
            && self.omega.iter().all(|c| c.is_finite())
            && self.rot.iter().all(|c| c.is_finite())
    }

    /// ‖RᵀR − I‖∞, the drift from orthonormality.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.rot.transpose() * self.rot - Matrix3::identity();
        m.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()))
    }

    /// Projects R back onto SO(3) (polar decomposition: the nearest
    /// rotation in Frobenius norm).
    pub fn renormalize(&mut self) {
        let svd = self.rot.svd(true, true);
        let u = svd.u.expect("svd of finite 3x3 matrix");
        let vt = svd.v_t.expect("svd of finite 3x3 matrix");
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            // Flip the weakest direction to land on SO(3), not O(3)\SO(3).
            let flip = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
            r = u * flip * vt;
        }
        self.rot = r;
    }
}

/// hat(v): the skew-symmetric matrix with hat(v)·w = v × w.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -v[2], v[1], //
        v[2], 0.0, -v[0], //
        -v[1], v[0], 0.0,
    )
}

/// Inverse of [`hat`]. Panics if `m` is not skew-symmetric to 1e−9;
/// use [`vee_nearest`] for inputs that are only approximately skew.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    let sym = m + m.transpose();
    let drift = sym.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    assert!(drift <= 1e-9, "vee: input not skew-symmetric (drift {drift:.3e})");
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// vee of the skew part (M − Mᵀ)/2: total, for finite-difference inputs.
pub fn vee_nearest(m: &Matrix3<f64>) -> Vector3<f64> {
    let skew = (m - m.transpose()) * 0.5;
    Vector3::new(skew[(2, 1)], skew[(0, 2)], skew[(1, 0)])
}

/// Rotor geometry: with speeds s = (s1..s4) in rpm,
/// ```text
/// τ  = k_τ (s1² + s2² + s3² + s4²)
/// μ1 = k_τ ℓ (s2² − s4²)
/// μ2 = k_τ ℓ (−s1² + s3²)
/// μ3 = k_μ (s1² − s2² + s3² − s4²)
/// ```
pub fn rotors_to_wrench(speeds: &[f64; 4], p: &QuadParams) -> Wrench {
    let sq: Vec<f64> = speeds.iter().map(|s| s * s).collect();
    Wrench {
        tau: p.k_tau * (sq[0] + sq[1] + sq[2] + sq[3]),
        mu: Vector3::new(
            p.k_tau * p.arm_length * (sq[1] - sq[3]),
            p.k_tau * p.arm_length * (-sq[0] + sq[2]),
            p.k_mu * (sq[0] - sq[1] + sq[2] - sq[3]),
        ),
    }
}

/// Inverts the rotor map on squared speeds, clamping each squared speed
/// into [rotor_min², rotor_max²]. A commanded wrench whose inversion
/// yields a negative squared speed saturates at the floor — saturation,
/// not an error.
pub fn wrench_to_rotors(u: &Wrench, p: &QuadParams) -> [f64; 4] {
    let a = u.tau / p.k_tau;
    let b = u.mu[0] / (p.k_tau * p.arm_length);
    let c = u.mu[1] / (p.k_tau * p.arm_length);
    let d = u.mu[2] / p.k_mu;
    // Solve: s1+s3 = (a+d)/2, s2+s4 = (a−d)/2, s2−s4 = b, s3−s1 = c
    // (squared speeds).
    let sq = [
        ((a + d) / 2.0 - c) / 2.0,
        ((a - d) / 2.0 + b) / 2.0,
        ((a + d) / 2.0 + c) / 2.0,
        ((a - d) / 2.0 - b) / 2.0,
    ];
    let lo = p.rotor_min * p.rotor_min;
    let hi = p.rotor_max * p.rotor_max;
    sq.map(|s| s.clamp(lo, hi).sqrt())
}

/// Commanded wrench → achievable wrench, through the saturating rotors.
pub fn saturate_wrench(u: &Wrench, p: &QuadParams) -> Wrench {
    rotors_to_wrench(&wrench_to_rotors(u, p), p)
}

/// Derivative of the vector part of the state; attitude evolves on the
/// group and is handled by each integrator.
#[derive(Debug, Clone, Copy)]
pub struct Derivative {
    pub dx: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub domega: Vector3<f64>,
}

/// Rigid-body dynamics with an already-saturated wrench:
/// ẋ = v, v̇ = (τ/m)·R·e3 − g·e3, ω̇ = J⁻¹(μ − ω × Jω), Ṙ = R·hat(ω).
pub fn dynamics(s: &QuadState, u: &Wrench, p: &QuadParams) -> Derivative {
    let e3 = Vector3::z();
    let j_omega = s.omega.component_mul(&p.inertia);
    let torque = u.mu - s.omega.cross(&j_omega);
    Derivative {
        dx: s.v,
        dv: (u.tau / p.mass) * (s.rot * e3) - p.gravity * e3,
        domega: torque.component_div(&p.inertia),
    }
}

/// exp(hat(w)) by the Rodrigues formula, with a series fallback for tiny
/// angles.
pub fn rot_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat(w);
    if theta < 1e-8 {
        // I + K + K²/2 is exact to O(θ³) ≤ 1e−24 here.
        return Matrix3::identity() + k + (k * k) * 0.5;
    }
    let (s, c) = (theta.sin(), theta.cos());
    Matrix3::identity() + k * (s / theta) + (k * k) * ((1.0 - c) / (theta * theta))
}

/// One explicit-Euler step for (x, v, ω) with the group update
/// R′ = R·exp(dt·hat(ω)). Does not saturate `u`.
pub fn step_lie_euler(s: &QuadState, u: &Wrench, dt: f64, p: &QuadParams) -> QuadState {
    let d = dynamics(s, u, p);
    QuadState {
        x: s.x + dt * d.dx,
        v: s.v + dt * d.dv,
        omega: s.omega + dt * d.domega,
        rot: s.rot * rot_exp(&(dt * s.omega)),
    }
}

/// dexp⁻¹ for the body-frame attitude update R(t) = R_n·exp(hat(u)):
/// u̇ = ω + ½ u×ω + (1/12) u×(u×ω), truncated at the order RK-MK4 needs.
fn dexpinv(u: &Vector3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    let c1 = u.cross(omega);
    omega + 0.5 * c1 + u.cross(&c1) / 12.0
}

/// One 4th-order Runge-Kutta/Munthe-Kaas step. The attitude is advanced
/// in exponential coordinates u (with R_stage = R_n·exp(hat(u_stage))),
/// so every stage stays exactly on SO(3). `u_fn` is re-evaluated at each
/// stage time and stage state; it should already include saturation.
pub fn step_rkmk4<F>(s: &QuadState, t: f64, u_fn: &mut F, dt: f64, p: &QuadParams) -> QuadState
where
    F: FnMut(f64, &QuadState) -> Wrench,
{
    struct Stage {
        dx: Vector3<f64>,
        dv: Vector3<f64>,
        du: Vector3<f64>,
        domega: Vector3<f64>,
    }
    // y = (x, v, u, ω) with u the log-coordinate of the attitude
    // increment; u(t_n) = 0.
    let mut eval = |tau: f64,
                    x: Vector3<f64>,
                    v: Vector3<f64>,
                    u: Vector3<f64>,
                    omega: Vector3<f64>|
     -> Stage {
        let stage_state = QuadState { x, v, omega, rot: s.rot * rot_exp(&u) };
        let w = u_fn(t + tau, &stage_state);
        let d = dynamics(&stage_state, &w, p);
        Stage { dx: d.dx, dv: d.dv, du: dexpinv(&u, &omega), domega: d.domega }
    };

    let z = Vector3::zeros();
    let k1 = eval(0.0, s.x, s.v, z, s.omega);
    let h2 = dt / 2.0;
    let k2 = eval(h2, s.x + h2 * k1.dx, s.v + h2 * k1.dv, h2 * k1.du, s.omega + h2 * k1.domega);
    let k3 = eval(h2, s.x + h2 * k2.dx, s.v + h2 * k2.dv, h2 * k2.du, s.omega + h2 * k2.domega);
    let k4 = eval(dt, s.x + dt * k3.dx, s.v + dt * k3.dv, dt * k3.du, s.omega + dt * k3.domega);

    let w6 = dt / 6.0;
    let u_final = w6 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
    QuadState {
        x: s.x + w6 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
        v: s.v + w6 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        omega: s.omega + w6 * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega),
        rot: s.rot * rot_exp(&u_final),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    LieEuler,
    RkMk4,
}

/// A dense, time-stamped closed-loop trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuadState>,
}

impl Trajectory {
    pub fn final_state(&self) -> &QuadState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// CSV export, one row per sample:
    /// `t,x1,x2,x3,v1,v2,v3,w1,w2,w3,r11..r33` (row-major R).
    pub fn to_csv<W: IoWrite>(&self, mut out: W) -> Result<(), SimError> {
        write!(out, "t,x1,x2,x3,v1,v2,v3,w1,w2,w3")?;
        for i in 1..=3 {
            for j in 1..=3 {
                write!(out, ",r{i}{j}")?;
            }
        }
        writeln!(out)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t}")?;
            for v in s.x.iter().chain(s.v.iter()).chain(s.omega.iter()) {
                write!(out, ",{v}")?;
            }
            for i in 0..3 {
                for j in 0..3 {
                    write!(out, ",{}", s.rot[(i, j)])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Forward-simulates the closed loop over `[0, t_span]` at resolution
/// `dt` with the chosen integrator. The controller runs as a sampled-data
/// loop: it is evaluated once per step, pushed through the saturating
/// rotor map, and held constant across the step for either integrator —
/// so the RK-MK4 variant refines only the plant integration, not the
/// control sampling. R is re-orthonormalized whenever drift exceeds
/// 1e−9. Aborts if any state component becomes non-finite.
pub fn simulate_with<F>(
    s0: &QuadState,
    mut ctrl: F,
    t_span: f64,
    dt: f64,
    p: &QuadParams,
    integrator: Integrator,
) -> Result<Trajectory, SimError>
where
    F: FnMut(f64, &QuadState) -> Wrench,
{
    assert!(dt > 0.0 && t_span >= 0.0, "need dt > 0 and t_span >= 0");
    let n_steps = (t_span / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut s = *s0;
    times.push(0.0);
    states.push(s);
    let mut sat_ctrl = |t: f64, state: &QuadState| saturate_wrench(&ctrl(t, state), p);
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let step = (t_span - t).min(dt);
        let u = sat_ctrl(t, &s);
        s = match integrator {
            Integrator::LieEuler => step_lie_euler(&s, &u, step, p),
            Integrator::RkMk4 => step_rkmk4(&s, t, &mut |_, _: &QuadState| u, step, p),
        };
        if s.orthonormality_error() > 1e-9 {
            s.renormalize();
        }
        let t_next = if i + 1 == n_steps { t_span } else { (i + 1) as f64 * dt };
        if !s.is_finite() {
            return Err(SimError::NonFiniteState {
                t: t_next,
                what: format!("x = {:?}, v = {:?}, omega = {:?}", s.x, s.v, s.omega),
            });
        }
        times.push(t_next);
        states.push(s);
    }
    Ok(Trajectory { times, states })
}

/// [`simulate_with`] using Lie-Euler, the plant integrator used
/// throughout the benchmark.
pub fn simulate<F>(
    s0: &QuadState,
    ctrl: F,
    t_span: f64,
    dt: f64,
    p: &QuadParams,
) -> Result<Trajectory, SimError>
where
    F: FnMut(f64, &QuadState) -> Wrench,
{
    simulate_with(s0, ctrl, t_span, dt, p, Integrator::LieEuler)
}
