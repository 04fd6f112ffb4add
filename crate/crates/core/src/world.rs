//! Randomized cluttered worlds, an independent collision checker, the
//! receding-horizon closed loop, and benchmark aggregation across seeds.
//!
//! The closed loop alternates execution and planning: each iteration the
//! vehicle flies the committed plan for `t_plan` of simulated time while the
//! next plan is computed for the state predicted at the handoff instant. In
//! deterministic mode the planner's closed-loop prediction *is* the executed
//! window (identical simulator, identical inputs), so each window is
//! simulated once and collision-checked sample by sample with a checker that
//! shares nothing with the planner's zonotope pipeline.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frs::{axis_blocks, TimedFRS};
use crate::geometry::{Box3, Interval};
use crate::planner::{
    error_augment, plan_iteration, ErrorModel, Plan, PlanError, PlannerConfig, SampleBall,
};
use crate::sim::QuadState;
use crate::tracking_error::TrackingErrorTable;

/// Speed below which the vehicle counts as at rest, both for fail-safe
/// detection and for the braking-realization check.
pub const REST_SPEED: f64 = 0.05;

/// Obstacle side lengths are drawn uniformly from this range, per axis.
pub const OBS_SIDE_RANGE: (f64, f64) = (0.5, 3.0);

/// Start and goal keep at least this distance from every obstacle.
pub const ENDPOINT_CLEARANCE: f64 = 1.0;

/// Start and goal keep at least this distance from the arena walls.
const ENDPOINT_WALL_MARGIN: f64 = 1.0;

/// Fraction of the long axis reserved at each end for start and goal.
const ENDPOINT_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("table mode requested but no tracking-error table was provided")]
    MissingTable,
}

/// One randomized arena: bounds, obstacles, and the start/goal pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounds: Box3,
    pub obstacles: Vec<Box3>,
    pub start: Vector3<f64>,
    pub goal: Vector3<f64>,
    pub seed: u64,
}

impl World {
    /// The benchmark arena: 80 m long, 20 m wide, 10 m tall, centered at
    /// the origin.
    pub fn default_bounds() -> Box3 {
        Box3::from_side_lengths(Vector3::zeros(), Vector3::new(80.0, 20.0, 10.0))
            .expect("positive side lengths")
    }
}

/// World-generation policy: obstacle size and placement distributions are
/// benchmark choices, so both are explicit and overridable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldPolicy {
    pub bounds: Box3,
    pub n_obstacles: usize,
    pub side_range: (f64, f64),
    pub clearance: f64,
}

impl Default for WorldPolicy {
    fn default() -> Self {
        Self {
            bounds: World::default_bounds(),
            n_obstacles: 120,
            side_range: OBS_SIDE_RANGE,
            clearance: ENDPOINT_CLEARANCE,
        }
    }
}

fn sample_endpoint(rng: &mut ChaCha8Rng, bounds: &Box3, long: usize, at_start: bool) -> Vector3<f64> {
    let (lo, hi) = (bounds.lo(), bounds.hi());
    Vector3::from_fn(|axis, _| {
        let mut a = lo[axis] + ENDPOINT_WALL_MARGIN;
        let mut b = hi[axis] - ENDPOINT_WALL_MARGIN;
        if axis == long {
            let band = ENDPOINT_FRACTION * (hi[axis] - lo[axis]);
            if at_start {
                b = b.min(lo[axis] + band);
            } else {
                a = a.max(hi[axis] - band);
            }
        }
        let b = b.max(a);
        rng.gen_range(a..=b)
    })
}

/// Deterministically generates a cluttered world from a seed: uniform
/// axis-aligned boxes with side lengths in `policy.side_range`, a start in
/// the first tenth of the long axis, a goal in the last tenth, both kept
/// `policy.clearance` clear of every obstacle (colliding draws are rejected
/// and redrawn, which keeps the generator deterministic).
pub fn generate_world_with(seed: u64, policy: &WorldPolicy) -> World {
    let bounds = &policy.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let long = (0..3)
        .max_by(|&a, &b| bounds.half[a].partial_cmp(&bounds.half[b]).unwrap())
        .unwrap();
    let start = sample_endpoint(&mut rng, bounds, long, true);
    let goal = sample_endpoint(&mut rng, bounds, long, false);
    let (lo, hi) = (bounds.lo(), bounds.hi());
    let mut obstacles = Vec::with_capacity(policy.n_obstacles);
    for _ in 0..policy.n_obstacles {
        // Rejection cap so degenerate bounds cannot hang the generator; at
        // the default arena scale the clearance balls are a vanishing
        // fraction of the volume and the cap is never approached.
        for _attempt in 0..1000 {
            let half = Vector3::from_fn(|axis, _| {
                let side_hi = policy.side_range.1.min(hi[axis] - lo[axis]);
                let side_lo = policy.side_range.0.min(side_hi);
                rng.gen_range(side_lo..=side_hi) / 2.0
            });
            let center =
                Vector3::from_fn(|axis, _| rng.gen_range(lo[axis] + half[axis]..=hi[axis] - half[axis]));
            let b = Box3::new(center, half).expect("positive extents");
            if b.distance_to(&start) > policy.clearance && b.distance_to(&goal) > policy.clearance {
                obstacles.push(b);
                break;
            }
        }
    }
    World { bounds: *bounds, obstacles, start, goal, seed }
}

/// [`generate_world_with`] under the default size/clearance policy.
pub fn generate_world(seed: u64, n_obs: usize, bounds: &Box3) -> World {
    let policy = WorldPolicy { bounds: *bounds, n_obstacles: n_obs, ..WorldPolicy::default() };
    generate_world_with(seed, &policy)
}

/// Independent collision check: true iff the body box centered at `x`
/// touches any obstacle (closed boxes — face contact counts) or is not
/// entirely inside the arena.
pub fn collision_check(x: &Vector3<f64>, world: &World, body: &Box3) -> bool {
    let b = body.translate(x);
    if !world.bounds.contains_box(&b) {
        return true;
    }
    world.obstacles.iter().any(|o| o.intersects(&b))
}

/// Which tracking-error source the planner buffers obstacles with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Trajectory-dependent error from the precomputed lookup table.
    Table,
    /// A fixed symmetric buffer, independent of the trajectory flown.
    Constant,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Table => "table",
            Mode::Constant => "constant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Goal,
    FailSafeStop,
    Crash,
    Timeout,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Goal => "goal",
            Outcome::FailSafeStop => "fail_safe_stop",
            Outcome::Crash => "crash",
            Outcome::Timeout => "timeout",
        })
    }
}

/// One executed 5 ms sample, with the reference and the planner's certified
/// position tube (pinned FRS slice, error- and body-buffered) for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    /// Body-frame angular velocity.
    pub omega: Vector3<f64>,
    /// Body-to-world rotation.
    pub rot: Matrix3<f64>,
    pub reference: Vector3<f64>,
    pub tube_lo: Vector3<f64>,
    pub tube_hi: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub outcome: Outcome,
    pub distance_traveled: f64,
    pub peak_speed: f64,
    pub iterations: u64,
    /// Simulated seconds elapsed when the trial ended.
    pub sim_time: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceSample>,
}

/// Everything a trial needs besides the world itself.
#[derive(Clone)]
pub struct TrialSetup<'a> {
    pub frs: &'a TimedFRS,
    pub table: Option<&'a TrackingErrorTable>,
    pub planner: PlannerConfig,
    pub goal_radius: f64,
    pub trial_timeout: f64,
    /// Floor for constant mode's buffer; the effective buffer never drops
    /// below the table's own global maximum when a table is available, so
    /// the baseline stays sound even if the measured error exceeds it.
    pub constant_buffer: f64,
    pub record_trace: bool,
}

impl<'a> TrialSetup<'a> {
    pub fn new(
        frs: &'a TimedFRS,
        table: Option<&'a TrackingErrorTable>,
        planner: PlannerConfig,
    ) -> Self {
        Self {
            frs,
            table,
            planner,
            goal_radius: 1.5,
            trial_timeout: 120.0,
            constant_buffer: 0.1,
            record_trace: false,
        }
    }

    pub fn effective_constant_buffer(&self) -> f64 {
        self.table
            .map_or(self.constant_buffer, |t| self.constant_buffer.max(t.global_max_extent()))
    }
}

/// Per-step world-frame tube extents for the committed plan, in plan-local
/// time: the k-pinned slice of the error- and body-augmented reachable set.
type Tube = Vec<(Interval, [(f64, f64); 3])>;

fn pinned_tube(
    frs: &TimedFRS,
    model: &ErrorModel,
    plan: &Plan,
    body: &Box3,
) -> Result<Tube, PlanError> {
    let (k_v, k_a, k_pk) = (plan.k.k_v(), plan.k.k_a(), plan.k.k_pk());
    let aug = error_augment(frs, model, &k_v, body)?;
    let mut out = Vec::with_capacity(aug.len());
    for tz in &aug {
        let blocks = axis_blocks(&tz.zono)?;
        let mut ext = [(0.0, 0.0); 3];
        for (axis, b) in blocks.iter().enumerate() {
            let pin = |k: f64, c: f64, g: f64| ((k - c) / g).clamp(-1.0, 1.0);
            let p = b.c_x
                + b.g_xv * pin(k_v[axis], b.c_v, b.g_v)
                + b.g_xa * pin(k_a[axis], b.c_a, b.g_a)
                + b.g_xpk * pin(k_pk[axis], b.c_pk, b.g_pk)
                + plan.x0[axis];
            ext[axis] = (p - b.eps, p + b.eps);
        }
        out.push((tz.t_interval, ext));
    }
    Ok(out)
}

fn tube_at(tube: &Tube, t_local: f64) -> &[(f64, f64); 3] {
    let t = t_local.clamp(0.0, tube.last().expect("tube has steps").0.hi);
    let i = tube.partition_point(|(iv, _)| iv.hi < t).min(tube.len() - 1);
    &tube[i].1
}

/// Flies one world to termination. The outcome is `Crash` exactly when the
/// independent checker fires on an executed sample; planner failures are not
/// errors (the vehicle keeps flying the committed plan, which ends at rest),
/// and the run stops as `FailSafeStop` after three consecutive planless
/// iterations at rest. Simulator divergence is the only error path.
pub fn run_trial(world: &World, mode: Mode, setup: &TrialSetup) -> Result<TrialResult, TrialError> {
    let model = match mode {
        Mode::Table => ErrorModel::Table(setup.table.ok_or(TrialError::MissingTable)?),
        Mode::Constant => ErrorModel::Constant(setup.effective_constant_buffer()),
    };
    let cfg = &setup.planner;
    let body = cfg.body_box();
    let ball = SampleBall::unit(cfg.opt_samples);
    let t_plan = cfg.timing.t_plan();

    let mut state = QuadState::hover_at(world.start);
    let mut plan = Plan::hover(world.start, cfg.timing);
    let mut elapsed = 0.0;
    let mut tube: Option<Tube> = if setup.record_trace {
        Some(pinned_tube(setup.frs, &model, &plan, &body)?)
    } else {
        None
    };

    let mut res = TrialResult {
        outcome: Outcome::Timeout,
        distance_traveled: 0.0,
        peak_speed: 0.0,
        iterations: 0,
        sim_time: 0.0,
        trace: Vec::new(),
    };
    let mut prev_pos = world.start;
    let mut t_global = 0.0;
    let mut no_plan_streak = 0u32;
    // Plan-local deadline by which braking must have finished, set whenever
    // the planner comes back empty-handed.
    let mut brake_deadline: Option<f64> = None;

    'trial: loop {
        res.iterations += 1;
        let out = plan_iteration(
            &state,
            &plan,
            elapsed,
            &world.goal,
            &world.obstacles,
            &world.bounds,
            setup.frs,
            &model,
            &ball,
            cfg,
        )?;
        // The window's first sample repeats the previous window's last one;
        // only the very first window processes it.
        let skip = usize::from(res.iterations > 1);
        let samples = out.prediction.times.iter().zip(&out.prediction.states);
        for (tl, s) in samples.skip(skip) {
            let speed = s.v.norm();
            res.peak_speed = res.peak_speed.max(speed);
            res.distance_traveled += (s.x - prev_pos).norm();
            prev_pos = s.x;
            res.sim_time = t_global + tl;
            if let Some(tube) = &tube {
                let ext = tube_at(tube, elapsed + tl);
                res.trace.push(TraceSample {
                    t: t_global + tl,
                    pos: s.x,
                    vel: s.v,
                    omega: s.omega,
                    rot: s.rot,
                    reference: plan.ref_at(elapsed + tl).pos,
                    tube_lo: Vector3::new(ext[0].0, ext[1].0, ext[2].0),
                    tube_hi: Vector3::new(ext[0].1, ext[1].1, ext[2].1),
                });
            }
            if let Some(dl) = brake_deadline {
                // Fail-safe realization: by the failed plan's own horizon
                // the vehicle must be at rest. A violation means the safety
                // argument's braking premise broke — stop loudly.
                assert!(
                    elapsed + tl < dl - 1e-9 || speed < REST_SPEED,
                    "fail-safe braking did not reach rest by t_fin (speed {speed})"
                );
            }
            if collision_check(&s.x, world, &body) {
                res.outcome = Outcome::Crash;
                break 'trial;
            }
            if (s.x - world.goal).norm() <= setup.goal_radius {
                res.outcome = Outcome::Goal;
                break 'trial;
            }
        }
        state = *out.prediction.final_state();
        t_global += t_plan;
        match out.plan {
            Some(p) => {
                plan = p;
                elapsed = 0.0;
                no_plan_streak = 0;
                brake_deadline = None;
                if setup.record_trace {
                    tube = Some(pinned_tube(setup.frs, &model, &plan, &body)?);
                }
            }
            None => {
                elapsed += t_plan;
                no_plan_streak += 1;
                brake_deadline = Some(cfg.timing.t_fin());
                if no_plan_streak >= 3 && state.v.norm() < REST_SPEED {
                    res.outcome = Outcome::FailSafeStop;
                    break;
                }
            }
        }
        if t_global >= setup.trial_timeout - 1e-9 {
            break; // outcome stays Timeout
        }
    }
    Ok(res)
}

/// One trial's result in a report, without the bulky trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub outcome: Outcome,
    pub distance_traveled: f64,
    pub peak_speed: f64,
    pub iterations: u64,
    pub sim_time: f64,
}

impl TrialRecord {
    fn new(seed: u64, r: &TrialResult) -> Self {
        Self {
            seed,
            outcome: r.outcome,
            distance_traveled: r.distance_traveled,
            peak_speed: r.peak_speed,
            iterations: r.iterations,
            sim_time: r.sim_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub crash_rate: f64,
    pub goal_rate: f64,
    pub trials: Vec<TrialRecord>,
}

impl ModeReport {
    pub fn aggregate(mode: Mode, seeds: Vec<u64>, trials: Vec<TrialRecord>) -> Self {
        let n = trials.len().max(1) as f64;
        let count = |o: Outcome| trials.iter().filter(|t| t.outcome == o).count() as f64;
        ModeReport {
            mode,
            seeds,
            crash_rate: count(Outcome::Crash) / n,
            goal_rate: count(Outcome::Goal) / n,
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub modes: Vec<ModeReport>,
}

/// World-generation policy plus the per-trial setup.
#[derive(Clone)]
pub struct BenchSetup<'a> {
    pub policy: WorldPolicy,
    pub trial: TrialSetup<'a>,
    /// Worker threads for the trial loop; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Runs every seed under every mode. Trials are independent and generated
/// from their seed alone, so results are deterministic per (seed, config)
/// pair when the planner runs with a deterministic budget.
pub fn run_benchmark(
    seeds: &[u64],
    modes: &[Mode],
    bench: &BenchSetup,
) -> Result<BenchmarkReport, TrialError> {
    let run = || -> Result<BenchmarkReport, TrialError> {
        let mut reports = Vec::with_capacity(modes.len());
        for &mode in modes {
            let trials = seeds
                .par_iter()
                .map(|&seed| {
                    let world = generate_world_with(seed, &bench.policy);
                    let r = run_trial(&world, mode, &bench.trial)?;
                    Ok(TrialRecord::new(seed, &r))
                })
                .collect::<Result<Vec<_>, TrialError>>()?;
            reports.push(ModeReport::aggregate(mode, seeds.to_vec(), trials));
        }
        Ok(BenchmarkReport { modes: reports })
    };
    match bench.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    }
}
