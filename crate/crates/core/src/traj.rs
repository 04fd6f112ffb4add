//! The trajectory-producing model: parameterized piecewise-polynomial
//! desired trajectories with a built-in fail-safe braking maneuver.
//!
//! Each spatial axis follows an independent quartic spline in two segments.
//! The first segment starts at velocity `κ_v` and acceleration `κ_a` and
//! reaches velocity `κ_pk` (with zero acceleration) at `t_pk`; the second
//! brakes from `κ_pk` to rest — zero velocity *and* acceleration — at
//! `t_fin`, so every trajectory ends in a stationary hover. Velocity and
//! acceleration are continuous across the junction.
//!
//! Position, velocity, and acceleration are all linear in the parameters,
//! which the reachability module exploits through [`affine_pos_coeffs`].

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Interval;

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("time {t} outside trajectory horizon [0, {t_fin}]")]
    TimeOutOfRange { t: f64, t_fin: f64 },
    #[error("invalid timing: need 0 < t_plan <= t_pk < t_fin, got ({t_plan}, {t_pk}, {t_fin})")]
    BadTiming { t_plan: f64, t_pk: f64, t_fin: f64 },
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    ParamOutOfBounds {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Planning, peak, and final times of every trajectory in the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajTiming {
    t_plan: f64,
    t_pk: f64,
    t_fin: f64,
}

impl TrajTiming {
    pub fn new(t_plan: f64, t_pk: f64, t_fin: f64) -> Result<Self, TrajError> {
        if !(0.0 < t_plan && t_plan <= t_pk && t_pk < t_fin) {
            return Err(TrajError::BadTiming { t_plan, t_pk, t_fin });
        }
        Ok(Self { t_plan, t_pk, t_fin })
    }

    pub fn t_plan(&self) -> f64 {
        self.t_plan
    }

    pub fn t_pk(&self) -> f64 {
        self.t_pk
    }

    pub fn t_fin(&self) -> f64 {
        self.t_fin
    }
}

impl Default for TrajTiming {
    /// (0.75 s, 1 s, 3 s).
    fn default() -> Self {
        Self {
            t_plan: 0.75,
            t_pk: 1.0,
            t_fin: 3.0,
        }
    }
}

/// Per-component bounds of the trajectory-parameter box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub kappa_v: Interval,
    pub kappa_a: Interval,
    pub kappa_pk: Interval,
}

impl ParamBounds {
    pub fn symmetric(kappa_v_max: f64, kappa_a_max: f64, kappa_pk_max: f64) -> Self {
        Self {
            kappa_v: Interval { lo: -kappa_v_max, hi: kappa_v_max },
            kappa_a: Interval { lo: -kappa_a_max, hi: kappa_a_max },
            kappa_pk: Interval { lo: -kappa_pk_max, hi: kappa_pk_max },
        }
    }

    /// True iff every component interval is symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        let sym = |iv: &Interval| (iv.lo + iv.hi).abs() <= 1e-12 * (1.0 + iv.hi.abs());
        sym(&self.kappa_v) && sym(&self.kappa_a) && sym(&self.kappa_pk)
    }
}

impl Default for ParamBounds {
    /// κ_v ∈ [−5, 5] m/s, κ_a ∈ [−10, 10] m/s², κ_pk ∈ [−5, 5] m/s.
    fn default() -> Self {
        Self::symmetric(5.0, 10.0, 5.0)
    }
}

/// One axis' trajectory parameter (κ_v, κ_a, κ_pk).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajParam1D {
    kappa_v: f64,
    kappa_a: f64,
    kappa_pk: f64,
}

impl TrajParam1D {
    /// Constructs a parameter, enforcing box membership.
    pub fn new(kappa_v: f64, kappa_a: f64, kappa_pk: f64, bounds: &ParamBounds) -> Result<Self, TrajError> {
        let check = |name: &'static str, value: f64, iv: &Interval| {
            if iv.contains(value) {
                Ok(())
            } else {
                Err(TrajError::ParamOutOfBounds {
                    name,
                    value,
                    lo: iv.lo,
                    hi: iv.hi,
                })
            }
        };
        check("kappa_v", kappa_v, &bounds.kappa_v)?;
        check("kappa_a", kappa_a, &bounds.kappa_a)?;
        check("kappa_pk", kappa_pk, &bounds.kappa_pk)?;
        Ok(Self { kappa_v, kappa_a, kappa_pk })
    }

    /// Bypasses the box check. The offline table build samples velocity-cell
    /// vertices that pad slightly beyond the box; the spline math is valid
    /// for any finite parameters.
    pub fn new_unchecked(kappa_v: f64, kappa_a: f64, kappa_pk: f64) -> Self {
        Self { kappa_v, kappa_a, kappa_pk }
    }

    pub fn kappa_v(&self) -> f64 {
        self.kappa_v
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }

    pub fn kappa_pk(&self) -> f64 {
        self.kappa_pk
    }
}

/// Full 3D trajectory parameter: one [`TrajParam1D`] per axis.
///
/// Serializes as a flat 9-element array ordered (κ_v, κ_a, κ_pk) per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 9]", from = "[f64; 9]")]
pub struct TrajParam {
    axes: [TrajParam1D; 3],
}

impl TrajParam {
    pub fn new(
        k_v: Vector3<f64>,
        k_a: Vector3<f64>,
        k_pk: Vector3<f64>,
        bounds: &ParamBounds,
    ) -> Result<Self, TrajError> {
        Ok(Self {
            axes: [
                TrajParam1D::new(k_v[0], k_a[0], k_pk[0], bounds)?,
                TrajParam1D::new(k_v[1], k_a[1], k_pk[1], bounds)?,
                TrajParam1D::new(k_v[2], k_a[2], k_pk[2], bounds)?,
            ],
        })
    }

    pub fn new_unchecked(k_v: Vector3<f64>, k_a: Vector3<f64>, k_pk: Vector3<f64>) -> Self {
        Self {
            axes: [
                TrajParam1D::new_unchecked(k_v[0], k_a[0], k_pk[0]),
                TrajParam1D::new_unchecked(k_v[1], k_a[1], k_pk[1]),
                TrajParam1D::new_unchecked(k_v[2], k_a[2], k_pk[2]),
            ],
        }
    }

    /// The all-zero parameter: a stationary reference.
    pub fn zero() -> Self {
        Self::new_unchecked(Vector3::zeros(), Vector3::zeros(), Vector3::zeros())
    }

    pub fn axis(&self, i: usize) -> &TrajParam1D {
        &self.axes[i]
    }

    pub fn k_v(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.axes[i].kappa_v)
    }

    pub fn k_a(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.axes[i].kappa_a)
    }

    pub fn k_pk(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.axes[i].kappa_pk)
    }
}

impl From<TrajParam> for [f64; 9] {
    fn from(k: TrajParam) -> Self {
        let mut out = [0.0; 9];
        for i in 0..3 {
            out[3 * i] = k.axes[i].kappa_v;
            out[3 * i + 1] = k.axes[i].kappa_a;
            out[3 * i + 2] = k.axes[i].kappa_pk;
        }
        out
    }
}

impl From<[f64; 9]> for TrajParam {
    fn from(a: [f64; 9]) -> Self {
        Self {
            axes: [
                TrajParam1D::new_unchecked(a[0], a[1], a[2]),
                TrajParam1D::new_unchecked(a[3], a[4], a[5]),
                TrajParam1D::new_unchecked(a[6], a[7], a[8]),
            ],
        }
    }
}

/// Desired position, velocity, and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefPoint {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub acc: Vector3<f64>,
}

impl RefPoint {
    pub fn zero() -> Self {
        Self {
            pos: Vector3::zeros(),
            vel: Vector3::zeros(),
            acc: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    /// `[0, t_pk]`: from (κ_v, κ_a) to velocity κ_pk, acceleration 0.
    First,
    /// `[t_pk, t_fin]`: braking from κ_pk to rest.
    Second,
}

/// Spline coefficients (c1, c2) for one segment:
/// `[c1; c2] = (1/c3³)·[[−12, 6c3], [6c3, −2c3²]]·[Δv; Δa]`.
pub fn segment_coeffs(kappa: &TrajParam1D, segment: Segment, timing: &TrajTiming) -> (f64, f64) {
    let (c3, dv, da) = match segment {
        Segment::First => (
            timing.t_pk,
            kappa.kappa_pk - kappa.kappa_v - kappa.kappa_a * timing.t_pk,
            -kappa.kappa_a,
        ),
        Segment::Second => (timing.t_fin - timing.t_pk, -kappa.kappa_pk, 0.0),
    };
    let c3_3 = c3 * c3 * c3;
    let c1 = (-12.0 * dv + 6.0 * c3 * da) / c3_3;
    let c2 = (6.0 * c3 * dv - 2.0 * c3 * c3 * da) / c3_3;
    (c1, c2)
}

/// Segment-local evaluation state: local time τ, segment coefficients, and
/// segment-initial velocity/acceleration/position.
struct SegEval {
    tau: f64,
    c1: f64,
    c2: f64,
    v0: f64,
    a0: f64,
    p0: f64,
}

fn seg_eval(t: f64, kappa: &TrajParam1D, timing: &TrajTiming) -> Result<SegEval, TrajError> {
    if !(0.0..=timing.t_fin).contains(&t) {
        return Err(TrajError::TimeOutOfRange { t, t_fin: timing.t_fin });
    }
    if t <= timing.t_pk {
        let (c1, c2) = segment_coeffs(kappa, Segment::First, timing);
        Ok(SegEval {
            tau: t,
            c1,
            c2,
            v0: kappa.kappa_v,
            a0: kappa.kappa_a,
            p0: 0.0,
        })
    } else {
        let (c1, c2) = segment_coeffs(kappa, Segment::Second, timing);
        // Position at the junction, from the first segment's closed form.
        let first = seg_eval(timing.t_pk, kappa, timing)?;
        Ok(SegEval {
            tau: t - timing.t_pk,
            c1,
            c2,
            v0: kappa.kappa_pk,
            a0: 0.0,
            p0: poly_pos(&first),
        })
    }
}

fn poly_pos(s: &SegEval) -> f64 {
    let t = s.tau;
    s.p0 + (s.c1 / 24.0) * t.powi(4) + (s.c2 / 6.0) * t.powi(3) + (s.a0 / 2.0) * t * t + s.v0 * t
}

fn poly_vel(s: &SegEval) -> f64 {
    let t = s.tau;
    (s.c1 / 6.0) * t.powi(3) + (s.c2 / 2.0) * t * t + s.a0 * t + s.v0
}

fn poly_acc(s: &SegEval) -> f64 {
    let t = s.tau;
    (s.c1 / 2.0) * t * t + s.c2 * t + s.a0
}

/// Desired velocity of one axis at time `t ∈ [0, t_fin]`.
pub fn vel_1d(t: f64, kappa: &TrajParam1D, timing: &TrajTiming) -> Result<f64, TrajError> {
    Ok(poly_vel(&seg_eval(t, kappa, timing)?))
}

/// Desired acceleration of one axis at time `t ∈ [0, t_fin]`.
pub fn acc_1d(t: f64, kappa: &TrajParam1D, timing: &TrajTiming) -> Result<f64, TrajError> {
    Ok(poly_acc(&seg_eval(t, kappa, timing)?))
}

/// Desired position of one axis at time `t ∈ [0, t_fin]`; `pos_1d(0) = 0`.
pub fn pos_1d(t: f64, kappa: &TrajParam1D, timing: &TrajTiming) -> Result<f64, TrajError> {
    Ok(poly_pos(&seg_eval(t, kappa, timing)?))
}

/// Desired state of the full 3D reference at time `t`; axes are independent.
pub fn ref_point(t: f64, k: &TrajParam, timing: &TrajTiming) -> Result<RefPoint, TrajError> {
    let mut pos = Vector3::zeros();
    let mut vel = Vector3::zeros();
    let mut acc = Vector3::zeros();
    for i in 0..3 {
        let s = seg_eval(t, &k.axes[i], timing)?;
        pos[i] = poly_pos(&s);
        vel[i] = poly_vel(&s);
        acc[i] = poly_acc(&s);
    }
    Ok(RefPoint { pos, vel, acc })
}

/// Position basis: `pos_1d(t; κ) = a_v(t)·κ_v + a_a(t)·κ_a + a_pk(t)·κ_pk`
/// exactly, by linearity of the spline in κ. Returns `(a_v, a_a, a_pk)`.
pub fn affine_pos_coeffs(t: f64, timing: &TrajTiming) -> Result<(f64, f64, f64), TrajError> {
    if !(0.0..=timing.t_fin).contains(&t) {
        return Err(TrajError::TimeOutOfRange { t, t_fin: timing.t_fin });
    }
    let tp = timing.t_pk;
    if t <= tp {
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        Ok((
            t4 / (2.0 * tp.powi(3)) - t3 / (tp * tp) + t,
            t4 / (4.0 * tp * tp) - 2.0 * t3 / (3.0 * tp) + t2 / 2.0,
            -t4 / (2.0 * tp.powi(3)) + t3 / (tp * tp),
        ))
    } else {
        let h = timing.t_fin - tp;
        let tau = t - tp;
        let t3 = tau * tau * tau;
        let t4 = t3 * tau;
        Ok((
            tp / 2.0,
            tp * tp / 12.0,
            tp / 2.0 + t4 / (2.0 * h.powi(3)) - t3 / (h * h) + tau,
        ))
    }
}

/// Time derivative of [`affine_pos_coeffs`]:
/// `vel_1d(t; κ) = a_v′(t)·κ_v + a_a′(t)·κ_a + a_pk′(t)·κ_pk` exactly.
pub fn affine_vel_coeffs(t: f64, timing: &TrajTiming) -> Result<(f64, f64, f64), TrajError> {
    if !(0.0..=timing.t_fin).contains(&t) {
        return Err(TrajError::TimeOutOfRange { t, t_fin: timing.t_fin });
    }
    let tp = timing.t_pk;
    if t <= tp {
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((
            2.0 * t3 / tp.powi(3) - 3.0 * t2 / (tp * tp) + 1.0,
            t3 / (tp * tp) - 2.0 * t2 / tp + t,
            -2.0 * t3 / tp.powi(3) + 3.0 * t2 / (tp * tp),
        ))
    } else {
        let h = timing.t_fin - tp;
        let tau = t - tp;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        Ok((0.0, 0.0, 2.0 * t3 / h.powi(3) - 3.0 * t2 / (h * h) + 1.0))
    }
}

/// Planning feasibility (Definition-3 constraints):
/// `‖k_pk − k_v‖₂ / t_pk ≤ a_max` and `‖k_pk‖₂ ≤ v_max`.
pub fn is_feasible(k: &TrajParam, timing: &TrajTiming, v_max: f64, a_max: f64) -> bool {
    let k_v = k.k_v();
    let k_pk = k.k_pk();
    (k_pk - k_v).norm() / timing.t_pk <= a_max && k_pk.norm() <= v_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn timing() -> TrajTiming {
        TrajTiming::default()
    }

    fn random_kappa(rng: &mut ChaCha8Rng) -> TrajParam1D {
        TrajParam1D::new_unchecked(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-5.0..5.0),
        )
    }

    /// 3-point Gauss-Legendre quadrature of `vel_1d`, composite over
    /// subintervals split at t_pk. Exact for polynomials up to degree 5,
    /// hence exact (to roundoff) for the quartic spline — an independent
    /// oracle for the closed-form position.
    fn quadrature_pos(t: f64, kappa: &TrajParam1D, tm: &TrajTiming) -> f64 {
        const NODES: [f64; 3] = [-0.774596669241483377, 0.0, 0.774596669241483377];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut cuts = vec![0.0];
        if t > tm.t_pk() {
            cuts.push(tm.t_pk());
        }
        cuts.push(t);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let n_sub = 8;
            let h = (b - a) / n_sub as f64;
            for s in 0..n_sub {
                let (lo, hi) = (a + s as f64 * h, a + (s + 1) as f64 * h);
                let c = 0.5 * (lo + hi);
                let r = 0.5 * (hi - lo);
                for (x, wt) in NODES.iter().zip(WEIGHTS) {
                    total += wt * r * vel_1d(c + r * x, kappa, tm).unwrap();
                }
            }
        }
        total
    }

    #[test]
    fn timing_validation() {
        assert!(TrajTiming::new(0.75, 1.0, 3.0).is_ok());
        assert!(TrajTiming::new(0.0, 1.0, 3.0).is_err());
        assert!(TrajTiming::new(1.5, 1.0, 3.0).is_err());
        assert!(TrajTiming::new(0.5, 3.0, 3.0).is_err());
        let d = TrajTiming::default();
        assert_eq!((d.t_plan(), d.t_pk(), d.t_fin()), (0.75, 1.0, 3.0));
    }

    #[test]
    fn param_bounds_enforced_at_construction() {
        let b = ParamBounds::default();
        assert!(TrajParam1D::new(5.0, -10.0, -5.0, &b).is_ok());
        assert!(TrajParam1D::new(5.1, 0.0, 0.0, &b).is_err());
        assert!(TrajParam1D::new(0.0, 10.5, 0.0, &b).is_err());
        assert!(TrajParam1D::new(0.0, 0.0, -5.2, &b).is_err());
    }

    #[test]
    fn segment_coeffs_hand_example() {
        // κ_v=0, κ_a=0, κ_pk=1, t_pk=1: Δv=1, c3=1 → (c1,c2)=(−12,6).
        let k = TrajParam1D::new_unchecked(0.0, 0.0, 1.0);
        let (c1, c2) = segment_coeffs(&k, Segment::First, &timing());
        assert_eq!((c1, c2), (-12.0, 6.0));
        // Constant-speed trajectory: both deltas vanish.
        let k = TrajParam1D::new_unchecked(2.0, 0.0, 2.0);
        let (c1, c2) = segment_coeffs(&k, Segment::First, &timing());
        assert_eq!((c1, c2), (0.0, 0.0));
        // Second segment always uses Δv=−κ_pk, Δa=0: for κ_pk=2, h=2:
        // c1 = 24/8 = 3, c2 = −12·2/8 = −3.
        let (c1, c2) = segment_coeffs(&k, Segment::Second, &timing());
        assert!((c1 - 3.0).abs() < 1e-15 && (c2 + 3.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_conditions() {
        let tm = timing();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let k = random_kappa(&mut rng);
            assert!((vel_1d(0.0, &k, &tm).unwrap() - k.kappa_v()).abs() < 1e-12);
            assert!((acc_1d(0.0, &k, &tm).unwrap() - k.kappa_a()).abs() < 1e-12);
            assert!((vel_1d(tm.t_pk(), &k, &tm).unwrap() - k.kappa_pk()).abs() < 1e-11);
            assert!(acc_1d(tm.t_pk(), &k, &tm).unwrap().abs() < 1e-11);
            assert!(vel_1d(tm.t_fin(), &k, &tm).unwrap().abs() < 1e-11);
            assert!(acc_1d(tm.t_fin(), &k, &tm).unwrap().abs() < 1e-11);
            assert_eq!(pos_1d(0.0, &k, &tm).unwrap(), 0.0);
        }
    }

    #[test]
    fn continuity_at_junction() {
        let tm = timing();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let k = random_kappa(&mut rng);
            let eps = 1e-9;
            let before = tm.t_pk() - eps;
            let after = tm.t_pk() + eps;
            assert!(
                (pos_1d(before, &k, &tm).unwrap() - pos_1d(after, &k, &tm).unwrap()).abs() < 1e-7
            );
            assert!(
                (vel_1d(before, &k, &tm).unwrap() - vel_1d(after, &k, &tm).unwrap()).abs() < 1e-7
            );
            assert!(
                (acc_1d(before, &k, &tm).unwrap() - acc_1d(after, &k, &tm).unwrap()).abs() < 1e-6
            );
        }
    }

    #[test]
    fn time_out_of_range_rejected() {
        let tm = timing();
        let k = TrajParam1D::new_unchecked(1.0, 0.0, 2.0);
        assert!(matches!(
            vel_1d(-0.01, &k, &tm),
            Err(TrajError::TimeOutOfRange { .. })
        ));
        assert!(pos_1d(3.01, &k, &tm).is_err());
        assert!(acc_1d(f64::NAN, &k, &tm).is_err());
        assert!(affine_pos_coeffs(3.5, &tm).is_err());
    }

    #[test]
    fn constant_velocity_position() {
        // κ_v = κ_pk = 2, κ_a = 0: first segment is constant speed.
        let tm = timing();
        let k = TrajParam1D::new_unchecked(2.0, 0.0, 2.0);
        assert!((pos_1d(tm.t_pk(), &k, &tm).unwrap() - 2.0).abs() < 1e-12);
        for t in [0.1, 0.4, 0.9] {
            assert!((vel_1d(t, &k, &tm).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_param_is_stationary() {
        let tm = timing();
        let k = TrajParam::zero();
        for t in [0.0, 0.3, 1.0, 1.7, 3.0] {
            let r = ref_point(t, &k, &tm).unwrap();
            assert_eq!(r.pos, Vector3::zeros());
            assert_eq!(r.vel, Vector3::zeros());
            assert_eq!(r.acc, Vector3::zeros());
        }
    }

    #[test]
    fn quadrature_oracle_validates_position() {
        let tm = timing();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let k = random_kappa(&mut rng);
            let t = rng.gen_range(0.0..=tm.t_fin());
            let closed = pos_1d(t, &k, &tm).unwrap();
            let numeric = quadrature_pos(t, &k, &tm);
            assert!(
                (closed - numeric).abs() <= 1e-9,
                "pos mismatch at t={t}: {closed} vs {numeric}"
            );
        }
    }

    #[test]
    fn affine_coeffs_reconstruct_position_and_velocity() {
        let tm = timing();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let k = random_kappa(&mut rng);
            let t = rng.gen_range(0.0..=tm.t_fin());
            let (av, aa, apk) = affine_pos_coeffs(t, &tm).unwrap();
            let recon = av * k.kappa_v() + aa * k.kappa_a() + apk * k.kappa_pk();
            assert!((recon - pos_1d(t, &k, &tm).unwrap()).abs() <= 1e-12);
            let (bv, ba, bpk) = affine_vel_coeffs(t, &tm).unwrap();
            let vrecon = bv * k.kappa_v() + ba * k.kappa_a() + bpk * k.kappa_pk();
            assert!((vrecon - vel_1d(t, &k, &tm).unwrap()).abs() <= 1e-12);
        }
        let (av, aa, apk) = affine_pos_coeffs(0.0, &tm).unwrap();
        assert_eq!((av, aa, apk), (0.0, 0.0, 0.0));
    }

    #[test]
    fn affine_coeffs_terminal_values() {
        // a_pk(t_fin) is the braking distance per unit peak speed:
        // t_pk/2 + (t_fin − t_pk)/2 = 1.5 s at default timing. Total
        // stopping displacement for κ_a=0 is a_v·κ_v + a_pk·κ_pk.
        let tm = timing();
        let (av, _, apk) = affine_pos_coeffs(tm.t_fin(), &tm).unwrap();
        assert!((apk - 1.5).abs() < 1e-12);
        assert!((av - 0.5).abs() < 1e-12);
        let k = TrajParam1D::new_unchecked(3.0, 0.0, 4.0);
        let stop = av * 3.0 + apk * 4.0;
        assert!((pos_1d(tm.t_fin(), &k, &tm).unwrap() - stop).abs() < 1e-12);
    }

    #[test]
    fn ref_point_axis_decoupling_and_oddness() {
        let tm = timing();
        let b = ParamBounds::default();
        let k1 = TrajParam::new(
            Vector3::new(1.0, 2.0, -1.0),
            Vector3::new(0.5, -1.0, 2.0),
            Vector3::new(2.0, 3.0, 0.0),
            &b,
        )
        .unwrap();
        // Change axis 1 only; axes 0 and 2 outputs unchanged.
        let k2 = TrajParam::new(
            Vector3::new(1.0, -2.0, -1.0),
            Vector3::new(0.5, 1.0, 2.0),
            Vector3::new(2.0, -3.0, 0.0),
            &b,
        )
        .unwrap();
        for t in [0.2, 0.9, 1.4, 2.8] {
            let r1 = ref_point(t, &k1, &tm).unwrap();
            let r2 = ref_point(t, &k2, &tm).unwrap();
            for i in [0usize, 2] {
                assert_eq!(r1.pos[i], r2.pos[i]);
                assert_eq!(r1.vel[i], r2.vel[i]);
            }
            // Oddness: ref_point(t, −k) = −ref_point(t, k).
            let kn = TrajParam::new_unchecked(-k1.k_v(), -k1.k_a(), -k1.k_pk());
            let rn = ref_point(t, &kn, &tm).unwrap();
            assert!((rn.pos + r1.pos).norm() < 1e-12);
            assert!((rn.vel + r1.vel).norm() < 1e-12);
            assert!((rn.acc + r1.acc).norm() < 1e-12);
        }
    }

    #[test]
    fn feasibility_examples() {
        let tm = timing();
        let b = ParamBounds::default();
        let k = |kv: Vector3<f64>, kpk: Vector3<f64>| {
            TrajParam::new(kv, Vector3::zeros(), kpk, &b).unwrap()
        };
        // k_pk = k_v within the speed ball: zero required acceleration.
        let same = k(Vector3::new(3.0, -2.0, 1.0), Vector3::new(3.0, -2.0, 1.0));
        assert!(is_feasible(&same, &tm, 5.0, 3.0));
        // 3.1 m/s velocity change in 1 s > a_max = 3.
        let hard = k(Vector3::zeros(), Vector3::new(3.1, 0.0, 0.0));
        assert!(!is_feasible(&hard, &tm, 5.0, 3.0));
        // Inside the per-component box but ‖k_pk‖₂ = √32 > v_max = 5.
        let fast = k(Vector3::new(4.0, 4.0, 0.0), Vector3::new(4.0, 4.0, 0.0));
        assert!(!is_feasible(&fast, &tm, 5.0, 3.0));
    }

    #[test]
    fn traj_param_serde_is_9_array() {
        let k = TrajParam::new_unchecked(
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::new(4.0, 5.0, 6.0),
            Vector3::new(-1.0, -2.0, -3.0),
        );
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, "[1.0,4.0,-1.0,2.0,5.0,-2.0,3.0,6.0,-3.0]");
        let back: TrajParam = serde_json::from_str(&s).unwrap();
        assert_eq!(k, back);
    }

    proptest! {
        // Linearity in κ at fixed t.
        #[test]
        fn prop_linear_in_kappa(
            t in 0.0f64..=3.0,
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            k1 in proptest::array::uniform3(-3.0f64..3.0),
            k2 in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let tm = timing();
            let ka = TrajParam1D::new_unchecked(k1[0], k1[1], k1[2]);
            let kb = TrajParam1D::new_unchecked(k2[0], k2[1], k2[2]);
            let kc = TrajParam1D::new_unchecked(
                a * k1[0] + b * k2[0],
                a * k1[1] + b * k2[1],
                a * k1[2] + b * k2[2],
            );
            let combo = a * pos_1d(t, &ka, &tm).unwrap() + b * pos_1d(t, &kb, &tm).unwrap();
            prop_assert!((pos_1d(t, &kc, &tm).unwrap() - combo).abs() < 1e-9);
            let vcombo = a * vel_1d(t, &ka, &tm).unwrap() + b * vel_1d(t, &kb, &tm).unwrap();
            prop_assert!((vel_1d(t, &kc, &tm).unwrap() - vcombo).abs() < 1e-9);
        }

        // Velocity stays finite and continuous: coarse Lipschitz sanity.
        #[test]
        fn prop_vel_continuous(
            t in 0.0f64..2.99,
            k in proptest::array::uniform3(-5.0f64..5.0),
        ) {
            let tm = timing();
            let kp = TrajParam1D::new_unchecked(k[0], k[1], k[2]);
            let dt = 1e-6;
            let v0 = vel_1d(t, &kp, &tm).unwrap();
            let v1 = vel_1d(t + dt, &kp, &tm).unwrap();
            // |dv| ≤ max possible acceleration · dt, with headroom.
            prop_assert!((v1 - v0).abs() < 200.0 * dt);
        }
    }
}
