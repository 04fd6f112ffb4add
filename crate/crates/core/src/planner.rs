//! One receding-horizon planning iteration: predict the handoff state,
//! inflate the reachable sets with tracking error and body extent, carve the
//! unsafe peak-velocity set out of parameter space exactly, and pick the best
//! safe peak velocity from a deterministic sample ball.
//!
//! The geometric core: after augmentation, each reachable step keeps the
//! per-axis block structure, so for a *pinned* initial condition (β_v, β_a
//! fixed by k_v, k_a) the reachable position interval is affine in β_pk.
//! Intersecting it with an obstacle interval therefore inverts to an exact
//! β_pk interval per axis, and the unsafe parameter set per (step, obstacle)
//! is a product box in peak-velocity space. Safety of a candidate k_pk is
//! then just "outside every unsafe box", evaluated via stacked half-space
//! constraints.
//!
//! Everything here is deterministic given its inputs: sensing order is world
//! order, unsafe boxes are collected in (step, obstacle) order, samples come
//! from a Halton sequence, and ties break on the smallest sample index.

use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{Gains, Tracker};
use crate::frs::{augment_position_error, axis_blocks, AxisBlock, FrsError, TimedFRS, TimedZonotope};
use crate::geometry::{Box3, Interval};
use crate::sim::{saturate_wrench, simulate, QuadParams, QuadState, SimError, Trajectory};
use crate::tracking_error::{ErrorBox, TableError, TrackingErrorTable};
use crate::traj::{
    affine_pos_coeffs, ref_point, ParamBounds, RefPoint, TrajParam, TrajTiming,
};

/// Static axis-aligned box obstacle (world or local frame by context).
pub type Obstacle = Box3;

/// Slop tolerated on the predicted speed before planning is declared
/// infeasible for this iteration (the table only covers ‖k_v‖ ≤ v_max).
const KV_OVERSHOOT_TOL: f64 = 0.25;

/// Division guard for the peak-velocity position gain: below this the step
/// has no peak-velocity authority and obstacle overlap is decided directly.
const GXPK_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Frs(#[from] FrsError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Where the next spline starts: predicted velocity, thrust-consistent
/// acceleration, and the world-frame anchor of the local planning frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub k_v: Vector3<f64>,
    pub k_a: Vector3<f64>,
    pub x0: Vector3<f64>,
}

/// A committed trajectory: parameters, timing, world anchor, and the
/// planning iteration that created it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub k: TrajParam,
    pub timing: TrajTiming,
    pub x0: Vector3<f64>,
    pub iteration: u64,
}

impl Plan {
    /// The all-zero plan: hover at `x0` indefinitely.
    pub fn hover(x0: Vector3<f64>, timing: TrajTiming) -> Self {
        Plan {
            k: TrajParam::zero(),
            timing,
            x0,
            iteration: 0,
        }
    }

    /// World-frame reference at plan-local time, clamped to the horizon.
    /// Past `t_fin` the spline has already come to rest, so clamping holds
    /// the terminal hover point.
    pub fn ref_at(&self, t_local: f64) -> RefPoint {
        let t = t_local.clamp(0.0, self.timing.t_fin());
        let mut r = ref_point(t, &self.k, &self.timing).expect("clamped time is in range");
        r.pos += self.x0;
        r
    }
}

/// Planner-facing tracking-error source: the precomputed table, or a fixed
/// symmetric buffer.
pub enum ErrorModel<'a> {
    Table(&'a TrackingErrorTable),
    Constant(f64),
}

impl ErrorModel<'_> {
    pub fn query_interval(
        &self,
        iv: Interval,
        k_v: &Vector3<f64>,
    ) -> Result<ErrorBox, TableError> {
        match self {
            ErrorModel::Table(t) => t.query_interval(iv.lo, iv.hi, k_v),
            ErrorModel::Constant(b) => Ok(ErrorBox {
                lo: Vector3::repeat(-b),
                hi: Vector3::repeat(*b),
            }),
        }
    }
}

/// Everything one planning iteration needs besides the live inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub quad: QuadParams,
    pub gains: Gains,
    pub timing: TrajTiming,
    pub bounds: ParamBounds,
    pub v_max: f64,
    pub a_max: f64,
    pub d_sense: f64,
    pub waypoint_dist: f64,
    pub opt_samples: usize,
    pub opt_batch: usize,
    /// Run every optimizer batch regardless of wall clock (reproducible CI).
    pub deterministic_budget: bool,
    /// Re-verify each accepted plan against the sensed obstacles.
    pub replay_check: bool,
    /// Half side length of the body box B_QR, m.
    pub body_half: f64,
    /// Closed-loop prediction step, s.
    pub dt_sim: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            quad: QuadParams::default(),
            gains: Gains::default(),
            timing: TrajTiming::default(),
            bounds: ParamBounds::default(),
            v_max: 5.0,
            a_max: 3.0,
            d_sense: 12.0,
            waypoint_dist: 5.0,
            opt_samples: 10_000,
            opt_batch: 1_000,
            deterministic_budget: false,
            replay_check: false,
            body_half: 0.27,
            dt_sim: 0.005,
        }
    }
}

impl PlannerConfig {
    pub fn body_box(&self) -> Box3 {
        Box3::cube(2.0 * self.body_half).expect("positive body side")
    }
}

/// Obstacles visible from the predicted position, translated into the local
/// frame (predicted position at the origin). Sensing is by nearest point,
/// boundary inclusive. The six world-boundary slabs are always appended so
/// staying inside the arena is an obstacle constraint like any other.
pub fn sense_obstacles(
    pred_pos: &Vector3<f64>,
    obstacles: &[Box3],
    bounds: &Box3,
    d_sense: f64,
) -> Vec<Box3> {
    let mut out: Vec<Box3> = obstacles
        .iter()
        .filter(|o| o.distance_to(pred_pos) <= d_sense)
        .map(|o| o.translate(&-pred_pos))
        .collect();
    out.extend(boundary_slabs(bounds).iter().map(|s| s.translate(&-pred_pos)));
    out
}

/// Six slabs hugging the outside of each arena face. They extend well past
/// the face edges so corner exits still intersect a slab, and are thick
/// enough that per-step reachable intervals cannot overlook them.
pub fn boundary_slabs(bounds: &Box3) -> [Box3; 6] {
    const THICKNESS: f64 = 1.0;
    const LATERAL_PAD: f64 = 10.0;
    let c = bounds.center;
    let h = bounds.half;
    let mut out = Vec::with_capacity(6);
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut center = c;
            let mut half = h.add_scalar(LATERAL_PAD);
            center[axis] = c[axis] + sign * (h[axis] + THICKNESS / 2.0);
            half[axis] = THICKNESS / 2.0;
            out.push(Box3::new(center, half).expect("positive slab extents"));
        }
    }
    out.try_into().unwrap()
}

/// Predicts the state at the next plan handoff by forward-simulating the
/// closed loop for `t_plan` from the current state, tracking the previous
/// plan from its current elapsed time. The spline's initial acceleration is
/// the thrust-consistent value at the predicted state, using the
/// controller's (saturated) command there.
pub fn initial_condition(
    state: &QuadState,
    prev_plan: &Plan,
    prev_elapsed: f64,
    cfg: &PlannerConfig,
) -> Result<(InitialCondition, Trajectory), PlanError> {
    let t_plan = cfg.timing.t_plan();
    let mut tracker = Tracker::new(cfg.gains);
    let refs = |t: f64| prev_plan.ref_at(prev_elapsed + t);
    let prediction = simulate(
        state,
        |t, s| tracker.control_at(t, s, &refs, &cfg.quad),
        t_plan,
        cfg.dt_sim,
        &cfg.quad,
    )?;
    let sf = *prediction.final_state();
    let u = saturate_wrench(
        &tracker.control_at(t_plan, &sf, &refs, &cfg.quad),
        &cfg.quad,
    );
    let k_a = (u.tau / cfg.quad.mass) * (sf.rot * Vector3::z())
        - cfg.quad.gravity * Vector3::z();
    Ok((
        InitialCondition {
            k_v: sf.v,
            k_a,
            x0: sf.x,
        },
        prediction,
    ))
}

/// Inflates every reachable step with the tracking-error box for its time
/// window (at the plan's initial velocity) plus the body box: position
/// centers shift by the error-box center; remainders grow by the error-box
/// half-extent plus the body half-extent.
pub fn error_augment(
    frs: &TimedFRS,
    model: &ErrorModel,
    k_v: &Vector3<f64>,
    body: &Box3,
) -> Result<Vec<TimedZonotope>, PlanError> {
    frs.steps()
        .iter()
        .map(|tz| {
            let eb = model.query_interval(tz.t_interval, k_v)?;
            let aug =
                augment_position_error(tz, &(eb.center() + body.center), &(eb.half() + body.half))?;
            Ok(aug)
        })
        .collect()
}

/// Exact per-axis unsafe peak-velocity interval against one obstacle, for a
/// pinned initial condition. Returns the product box, or `None` when some
/// axis cannot reach the obstacle.
pub fn intersect_obs(
    zeps: &TimedZonotope,
    o: &Box3,
    k_v: &Vector3<f64>,
    k_a: &Vector3<f64>,
) -> Result<Option<Box3>, PlanError> {
    let blocks = axis_blocks(&zeps.zono)?;
    Ok(intersect_blocks(&blocks, o, k_v, k_a))
}

/// [`intersect_obs`] on pre-decoded blocks (the hot path re-uses the blocks
/// across obstacles).
///
/// Derivation per axis: position conditioned on the pinned parameters is
/// `pinned0 + g_xpk·β_pk ± ε`, so it meets `[o_lo, o_hi]` iff
/// `β_pk ∈ [(o_lo − ε − pinned0)/g_xpk, (o_hi + ε − pinned0)/g_xpk]`.
/// That interval is intersected with the valid coefficient range [−1, 1]
/// (clamping inward; an outward clamp would mark reachable-but-safe
/// parameters unsafe and break exactness) and mapped through κ = c + g·β.
fn intersect_blocks(
    blocks: &[AxisBlock; 3],
    o: &Box3,
    k_v: &Vector3<f64>,
    k_a: &Vector3<f64>,
) -> Option<Box3> {
    let mut lo = Vector3::zeros();
    let mut hi = Vector3::zeros();
    for axis in 0..3 {
        let b = &blocks[axis];
        let pin = |k: f64, c: f64, g: f64| ((k - c) / g).clamp(-1.0, 1.0);
        let pinned0 = b.c_x
            + b.g_xv * pin(k_v[axis], b.c_v, b.g_v)
            + b.g_xa * pin(k_a[axis], b.c_a, b.g_a);
        let (o_lo, o_hi) = (o.lo()[axis], o.hi()[axis]);
        if b.g_xpk.abs() < GXPK_EPS {
            // No peak-velocity authority on this axis: the whole κ_pk range
            // is unsafe iff the ε-inflated obstacle already covers the
            // pinned position (the continuous limit of the division below).
            if o_lo - b.eps <= pinned0 && pinned0 <= o_hi + b.eps {
                lo[axis] = b.c_pk - b.g_pk;
                hi[axis] = b.c_pk + b.g_pk;
                continue;
            }
            return None;
        }
        let mut beta_lo = (o_lo - b.eps - pinned0) / b.g_xpk;
        let mut beta_hi = (o_hi + b.eps - pinned0) / b.g_xpk;
        if beta_lo > beta_hi {
            std::mem::swap(&mut beta_lo, &mut beta_hi);
        }
        if beta_lo > 1.0 || beta_hi < -1.0 {
            return None;
        }
        lo[axis] = b.c_pk + b.g_pk * beta_lo.max(-1.0);
        hi[axis] = b.c_pk + b.g_pk * beta_hi.min(1.0);
    }
    Some(Box3::from_corners(lo, hi).expect("ordered interval corners"))
}

/// One unsafe box in peak-velocity space, tagged with its origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnsafeBox {
    pub step: usize,
    pub obstacle: usize,
    pub bounds: Box3,
}

pub type UnsafeBoxSet = Vec<UnsafeBox>;

/// Stacked half-space form of the unsafe boxes: one 6-row block per box,
/// rows `(±e_1, ±e_2, ±e_3)` paired with `b = ∓c_i + h_i`, so a point is
/// inside a box iff its whole block of `A·k + b` is non-negative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    a: Vec<Vector3<f64>>,
    b: Vec<f64>,
}

impl ConstraintSet {
    pub fn push_box(&mut self, bx: &Box3) {
        for axis in 0..3 {
            let mut e = Vector3::zeros();
            e[axis] = 1.0;
            self.a.push(e);
            self.b.push(-bx.center[axis] + bx.half[axis]);
            self.a.push(-e);
            self.b.push(bx.center[axis] + bx.half[axis]);
        }
    }

    pub fn from_boxes(boxes: &UnsafeBoxSet) -> Self {
        let mut cs = ConstraintSet::default();
        for ub in boxes {
            cs.push_box(&ub.bounds);
        }
        cs
    }

    pub fn num_blocks(&self) -> usize {
        self.b.len() / 6
    }

    pub fn rows(&self) -> (&[Vector3<f64>], &[f64]) {
        (&self.a, &self.b)
    }

    /// Minimum of `A·k + b` over one block; negative iff `k` is strictly
    /// outside that unsafe box on some axis.
    pub fn block_min(&self, block: usize, k: &Vector3<f64>) -> f64 {
        let mut m = f64::INFINITY;
        for r in 6 * block..6 * (block + 1) {
            m = m.min(self.a[r].dot(k) + self.b[r]);
        }
        m
    }

    /// Safe iff every block's minimum is negative (outside every box). On
    /// the boundary of a box the minimum is zero — counted unsafe, matching
    /// closed obstacles.
    pub fn is_safe(&self, k: &Vector3<f64>) -> bool {
        (0..self.num_blocks()).all(|i| self.block_min(i, k) < 0.0)
    }
}

/// Convenience wrapper matching the pipeline vocabulary.
pub fn generate_constraints(unsafe_boxes: &UnsafeBoxSet) -> ConstraintSet {
    ConstraintSet::from_boxes(unsafe_boxes)
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic low-discrepancy unit ball (Halton bases 2, 3, 5; radius by
/// cube root, direction by area-preserving sphere map). Scaled and centered
/// at plan time.
#[derive(Debug, Clone)]
pub struct SampleBall {
    pts: Vec<Vector3<f64>>,
}

impl SampleBall {
    pub fn unit(n: usize) -> Self {
        let pts = (1..=n as u64)
            .map(|i| {
                let rho = halton(i, 5).cbrt();
                let cos_t = 2.0 * halton(i, 2) - 1.0;
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                let phi = 2.0 * std::f64::consts::PI * halton(i, 3);
                rho * Vector3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
            })
            .collect();
        SampleBall { pts }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OptStats {
    pub batches_run: usize,
    pub samples_considered: usize,
    pub samples_feasible: usize,
    pub samples_safe: usize,
    pub budget_exhausted: bool,
}

/// Picks the lowest-cost feasible, safe peak velocity from the sample ball
/// (radius `min(v_max, a_max·t_pk)` about `k_v`). Works in batches with a
/// wall-clock check between them (skipped in deterministic mode), so the
/// time budget is overrun by at most one batch. Ties break on the smallest
/// sample index.
pub fn optimize<C>(
    cost: C,
    constraints: &ConstraintSet,
    k_v: &Vector3<f64>,
    ball: &SampleBall,
    cfg: &PlannerConfig,
    started: Instant,
) -> (Option<Vector3<f64>>, OptStats)
where
    C: Fn(&Vector3<f64>) -> f64 + Sync,
{
    let radius = cfg.v_max.min(cfg.a_max * cfg.timing.t_pk());
    let kpk_max = cfg.bounds.kappa_pk.hi;
    let accel_cap = cfg.a_max * cfg.timing.t_pk();
    let budget = cfg.timing.t_plan();
    let mut stats = OptStats::default();
    let mut best: Option<(f64, usize, Vector3<f64>)> = None;
    let batch = cfg.opt_batch.max(1);
    let mut start = 0;
    while start < ball.pts.len() {
        let end = (start + batch).min(ball.pts.len());
        let batch_best = ball.pts[start..end]
            .par_iter()
            .enumerate()
            .filter_map(|(off, unit)| {
                let k_pk = k_v + radius * unit;
                let feasible = k_pk.norm() <= cfg.v_max
                    && (k_pk - k_v).norm() <= accel_cap
                    && k_pk.amax() <= kpk_max;
                if !feasible {
                    return None;
                }
                if !constraints.is_safe(&k_pk) {
                    return Some((None, 1usize, 0usize));
                }
                Some((Some((cost(&k_pk), start + off, k_pk)), 1, 1))
            })
            .reduce(
                || (None, 0, 0),
                |acc, x| {
                    let cand = match (acc.0, x.0) {
                        (Some(a), Some(b)) => {
                            // Lexicographic (cost, index): deterministic
                            // regardless of reduction order.
                            if (b.0, b.1) < (a.0, a.1) {
                                Some(b)
                            } else {
                                Some(a)
                            }
                        }
                        (a, b) => a.or(b),
                    };
                    (cand, acc.1 + x.1, acc.2 + x.2)
                },
            );
        stats.batches_run += 1;
        stats.samples_considered += end - start;
        stats.samples_feasible += batch_best.1;
        stats.samples_safe += batch_best.2;
        if let Some(b) = batch_best.0 {
            if best.map_or(true, |a| (b.0, b.1) < (a.0, a.1)) {
                best = Some(b);
            }
        }
        start = end;
        if !cfg.deterministic_budget && started.elapsed().as_secs_f64() > budget {
            stats.budget_exhausted = start < ball.pts.len();
            break;
        }
    }
    (best.map(|(_, _, k)| k), stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub sensed_obstacles: usize,
    pub unsafe_boxes: usize,
    pub constraint_blocks: usize,
    pub opt: OptStats,
    pub fail_safe: bool,
}

/// Result of one planning iteration. `plan` is `None` when the robot should
/// keep flying the previous plan to its built-in stop (fail-safe). The
/// closed-loop `prediction` doubles as the executed window in deterministic
/// benchmarks (identical simulator, identical inputs).
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub plan: Option<Plan>,
    pub init: InitialCondition,
    pub prediction: Trajectory,
    pub stats: IterationStats,
}

/// Runs the full iteration: predict, sense, augment, intersect, constrain,
/// optimize. All planning failures (speed overshoot, exhausted budget, no
/// safe sample) degrade to fail-safe continuation rather than errors.
#[allow(clippy::too_many_arguments)]
pub fn plan_iteration(
    state: &QuadState,
    prev_plan: &Plan,
    prev_elapsed: f64,
    goal: &Vector3<f64>,
    obstacles: &[Box3],
    bounds: &Box3,
    frs: &TimedFRS,
    model: &ErrorModel,
    ball: &SampleBall,
    cfg: &PlannerConfig,
) -> Result<IterationOutcome, PlanError> {
    let started = Instant::now();
    let (init, prediction) = initial_condition(state, prev_plan, prev_elapsed, cfg)?;
    let mut stats = IterationStats::default();
    let fail_safe = |init: InitialCondition, prediction: Trajectory, mut stats: IterationStats| {
        stats.fail_safe = true;
        Ok(IterationOutcome {
            plan: None,
            init,
            prediction,
            stats,
        })
    };
    // The safety certificate pins β_v, β_a by clamping into the parameter
    // box, so it only covers initial conditions inside that box; a handoff
    // state outside it (velocity overshoot beyond tolerance, or a thrust
    // transient past the acceleration bound) cannot be certified and falls
    // back to the committed plan's built-in stop.
    if !(init.k_v.norm() <= cfg.v_max + KV_OVERSHOOT_TOL)
        || !init.k_v.iter().all(|v| v.abs() <= cfg.bounds.kappa_v.hi)
        || !init.k_a.iter().all(|a| a.is_finite() && a.abs() <= cfg.bounds.kappa_a.hi)
    {
        return fail_safe(init, prediction, stats);
    }

    let sensed = sense_obstacles(&init.x0, obstacles, bounds, cfg.d_sense);
    stats.sensed_obstacles = sensed.len();

    let aug = error_augment(frs, model, &init.k_v, &cfg.body_box())?;

    let mut unsafe_boxes: UnsafeBoxSet = Vec::new();
    for (si, step) in aug.iter().enumerate() {
        let blocks = axis_blocks(&step.zono)?;
        // Full position projection per axis (over all parameters): an
        // obstacle disjoint from it cannot intersect any pinned slice, so
        // the pair is skipped without changing the result.
        let proj: [Interval; 3] = std::array::from_fn(|i| {
            let b = &blocks[i];
            let spread = b.g_xv.abs() + b.g_xa.abs() + b.g_xpk.abs() + b.eps;
            Interval {
                lo: b.c_x - spread,
                hi: b.c_x + spread,
            }
        });
        for (oi, o) in sensed.iter().enumerate() {
            if (0..3).any(|i| !proj[i].intersects(&o.axis(i))) {
                continue;
            }
            if let Some(bx) = intersect_blocks(&blocks, o, &init.k_v, &init.k_a) {
                unsafe_boxes.push(UnsafeBox {
                    step: si,
                    obstacle: oi,
                    bounds: bx,
                });
            }
        }
    }
    stats.unsafe_boxes = unsafe_boxes.len();
    let constraints = generate_constraints(&unsafe_boxes);
    stats.constraint_blocks = constraints.num_blocks();

    // Waypoint: `waypoint_dist` toward the goal (or the goal itself when
    // closer), expressed in the local frame.
    let goal_local = goal - init.x0;
    let dist = goal_local.norm();
    let wp = if dist <= cfg.waypoint_dist || dist == 0.0 {
        goal_local
    } else {
        goal_local * (cfg.waypoint_dist / dist)
    };
    let (av, aa, apk) = affine_pos_coeffs(cfg.timing.t_pk(), &cfg.timing)
        .expect("peak time within horizon");
    let fixed = av * init.k_v + aa * init.k_a;
    let cost = |k_pk: &Vector3<f64>| (fixed + apk * k_pk - wp).norm_squared();

    let (choice, opt_stats) = optimize(cost, &constraints, &init.k_v, ball, cfg, started);
    stats.opt = opt_stats;

    let Some(k_pk) = choice else {
        return fail_safe(init, prediction, stats);
    };
    let plan = Plan {
        k: TrajParam::new_unchecked(init.k_v, init.k_a, k_pk),
        timing: cfg.timing,
        x0: init.x0,
        iteration: prev_plan.iteration + 1,
    };
    if cfg.replay_check {
        assert!(
            replay_is_sound(&plan.k, &aug, &sensed),
            "accepted plan intersects a sensed obstacle in replay"
        );
    }
    Ok(IterationOutcome {
        plan: Some(plan),
        init,
        prediction,
        stats,
    })
}

/// Soundness replay: the chosen parameters' pinned position interval
/// (center ± ε per augmented step) must stay clear of every sensed obstacle
/// on at least one axis. `is_safe` acceptance implies this by construction;
/// the replay re-derives it independently of the constraint algebra.
pub fn replay_is_sound(k: &TrajParam, aug: &[TimedZonotope], sensed: &[Box3]) -> bool {
    for step in aug {
        let Ok(blocks) = axis_blocks(&step.zono) else {
            return false;
        };
        let mut lo = Vector3::zeros();
        let mut hi = Vector3::zeros();
        for axis in 0..3 {
            let b = &blocks[axis];
            let pin = |kv: f64, c: f64, g: f64| ((kv - c) / g).clamp(-1.0, 1.0);
            let a = k.axis(axis);
            let pinned = b.c_x
                + b.g_xv * pin(a.kappa_v(), b.c_v, b.g_v)
                + b.g_xa * pin(a.kappa_a(), b.c_a, b.g_a)
                + b.g_xpk * pin(a.kappa_pk(), b.c_pk, b.g_pk);
            lo[axis] = pinned - b.eps;
            hi[axis] = pinned + b.eps;
        }
        for o in sensed {
            if (0..3).all(|i| lo[i] <= o.hi()[i] && o.lo()[i] <= hi[i]) {
                return false;
            }
        }
    }
    true
}
