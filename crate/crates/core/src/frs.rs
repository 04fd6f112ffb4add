//! Forward reachable sets of the spline family, represented as labeled
//! zonotopes over one planning horizon.
//!
//! Position along each axis is affine in that axis's parameters,
//! `x(t) = a_v(t)·κ_v + a_a(t)·κ_a + a_pk(t)·κ_pk` (see
//! [`crate::traj::affine_pos_coeffs`]), so the set of (position, parameter)
//! tuples reachable over a short time step is captured *exactly up to a
//! certified remainder* by a zonotope with one generator per parameter plus
//! one remainder generator. Each per-axis 4×4 block has the shape
//!
//! ```text
//! rows:  x   | γ_xv  γ_xa  γ_xpk  ε |        γ_x• = a_•(t_c) κ_•⁺
//!        κ_v | κ_v⁺  0     0      0 |        t_c  = step midpoint
//!        κ_a | 0     κ_a⁺  0      0 |        ε    ≥ Σ_• max_t |a_•(t) − a_•(t_c)| κ_•⁺
//!        κ_pk| 0     0     κ_pk⁺  0 |
//! ```
//!
//! Keeping the parameter rows inside the set is what lets the planner slice
//! the position interval *conditioned on a parameter choice*: fixing β from
//! the κ rows pins the position to `c_x + Σ γ_x• β• ± ε`.
//!
//! The remainder ε is certified, not sampled-and-hoped: within one step the
//! coefficient deviation is bounded by the max over 32 subinterval nodes plus
//! `(Δt/64)·L` where `L` is the exact maximum of `|a_•′|` over the step
//! (closed form — each `a_•′` is a cubic, maximized at interval endpoints or
//! roots of its quadratic derivative). Steps never straddle the peak time, so
//! each step lies in a single polynomial segment.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Interval, RowLabel, Zonotope};
use crate::traj::{affine_pos_coeffs, ParamBounds, TrajTiming};

/// Nodes sampled per step when bounding the coefficient deviation; the grid
/// has 32 subintervals, so any time in the step is within `Δt/64` of a node.
const REMAINDER_NODES: usize = 32;

/// On-disk format version for [`FrsArtifact`].
pub const FRS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FrsError {
    #[error("parameter bounds must be symmetric intervals [−b, b]; {0}")]
    AsymmetricBounds(String),
    #[error("step duration must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("zonotope violates the reachable-set block structure: {0}")]
    BadStructure(String),
    #[error("reachable-set artifact is malformed: {0}")]
    Format(String),
    #[error("reachable-set artifact does not match this configuration: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A reachable set valid for all times in a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedZonotope {
    pub t_interval: Interval,
    pub zono: Zonotope,
}

/// Reachable sets for one planning horizon: consecutive steps partition
/// `[0, t_fin]` and none straddles `t_pk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedFRS {
    steps: Vec<TimedZonotope>,
    timing: TrajTiming,
    bounds: ParamBounds,
}

impl TimedFRS {
    pub fn steps(&self) -> &[TimedZonotope] {
        &self.steps
    }

    pub fn timing(&self) -> &TrajTiming {
        &self.timing
    }

    pub fn bounds(&self) -> &ParamBounds {
        &self.bounds
    }

    /// First step whose closed time interval contains `t`. Times on a shared
    /// boundary belong to both neighbors; either answer is a valid cover.
    pub fn step_covering(&self, t: f64) -> Option<&TimedZonotope> {
        if !t.is_finite() {
            return None;
        }
        // Steps are sorted by t_lo; find the first not ending before t.
        let idx = self.steps.partition_point(|s| s.t_interval.hi < t);
        self.steps.get(idx).filter(|s| s.t_interval.contains(t))
    }

    /// Rejects an artifact built for a different plan shape or parameter box.
    pub fn validate_against(
        &self,
        timing: &TrajTiming,
        bounds: &ParamBounds,
    ) -> Result<(), FrsError> {
        if self.timing != *timing {
            return Err(FrsError::ConfigMismatch(format!(
                "timing (t_plan, t_pk, t_fin) = ({}, {}, {}) in artifact vs ({}, {}, {}) expected",
                self.timing.t_plan(),
                self.timing.t_pk(),
                self.timing.t_fin(),
                timing.t_plan(),
                timing.t_pk(),
                timing.t_fin(),
            )));
        }
        if self.bounds != *bounds {
            return Err(FrsError::ConfigMismatch(
                "parameter bounds differ from the artifact's".to_string(),
            ));
        }
        Ok(())
    }
}

fn ensure_symmetric(bounds: &ParamBounds) -> Result<(), FrsError> {
    if bounds.is_symmetric() {
        Ok(())
    } else {
        Err(FrsError::AsymmetricBounds(format!(
            "got κ_v ∈ [{}, {}], κ_a ∈ [{}, {}], κ_pk ∈ [{}, {}]",
            bounds.kappa_v.lo,
            bounds.kappa_v.hi,
            bounds.kappa_a.lo,
            bounds.kappa_a.hi,
            bounds.kappa_pk.lo,
            bounds.kappa_pk.hi,
        )))
    }
}

fn axis_labels(axis: usize) -> [RowLabel; 4] {
    [
        RowLabel::Pos(axis),
        RowLabel::KappaV(axis),
        RowLabel::KappaA(axis),
        RowLabel::KappaPk(axis),
    ]
}

/// Reachable set at `t = 0` for one axis: position is pinned to the origin of
/// the plan frame and the parameters range over their full symmetric box, so
/// the generator matrix is `diag(0, κ_v⁺, κ_a⁺, κ_pk⁺)`.
pub fn initial_set_1d(bounds: &ParamBounds, axis: usize) -> Result<Zonotope, FrsError> {
    ensure_symmetric(bounds)?;
    assert!(axis < 3, "axis {axis} out of range");
    let half = [0.0, bounds.kappa_v.hi, bounds.kappa_a.hi, bounds.kappa_pk.hi];
    let generators = DMatrix::from_fn(4, 4, |r, c| if r == c { half[r] } else { 0.0 });
    Zonotope::new(DVector::zeros(4), generators, axis_labels(axis).to_vec())
        .map_err(|e| FrsError::BadStructure(e.to_string()))
}

/// Step boundaries: every multiple of `dt_frs` in `(0, t_fin)` plus `0`,
/// `t_pk`, and `t_fin`. Multiples landing within floating-point slop of
/// `t_pk`/`t_fin` are snapped so those times appear exactly once.
pub fn time_grid(timing: &TrajTiming, dt_frs: f64) -> Result<Vec<f64>, FrsError> {
    if !(dt_frs.is_finite() && dt_frs > 0.0) {
        return Err(FrsError::BadStep(dt_frs));
    }
    let t_pk = timing.t_pk();
    let t_fin = timing.t_fin();
    let tol = 1e-9 * t_fin.max(1.0);
    let mut pts = vec![0.0, t_pk, t_fin];
    let mut k = 1u64;
    loop {
        let mut t = k as f64 * dt_frs;
        if t >= t_fin - tol {
            break;
        }
        if (t - t_pk).abs() <= tol {
            t = t_pk;
        }
        pts.push(t);
        k += 1;
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|b, a| (*b - *a).abs() <= tol);
    Ok(pts)
}

/// Cubic coefficients `[c3, c2, c1, c0]` of each `a_•′` in the local segment
/// time τ, for (a_v′, a_a′, a_pk′). `peak_side == true` means the segment
/// before `t_pk`.
fn vel_cubics(timing: &TrajTiming, peak_side: bool) -> [[f64; 4]; 3] {
    if peak_side {
        let tp = timing.t_pk();
        [
            [2.0 / tp.powi(3), -3.0 / tp.powi(2), 0.0, 1.0],
            [1.0 / tp.powi(2), -2.0 / tp, 1.0, 0.0],
            [-2.0 / tp.powi(3), 3.0 / tp.powi(2), 0.0, 0.0],
        ]
    } else {
        let h = timing.t_fin() - timing.t_pk();
        [
            [0.0; 4],
            [0.0; 4],
            [2.0 / h.powi(3), -3.0 / h.powi(2), 0.0, 1.0],
        ]
    }
}

fn eval_cubic(c: &[f64; 4], tau: f64) -> f64 {
    ((c[0] * tau + c[1]) * tau + c[2]) * tau + c[3]
}

/// Exact `max |cubic|` over `[lo, hi]`: the extrema are at the endpoints or
/// at real roots of the quadratic derivative inside the interval.
fn max_abs_cubic(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let mut m = eval_cubic(c, lo).abs().max(eval_cubic(c, hi).abs());
    let (qa, qb, qc) = (3.0 * c[0], 2.0 * c[1], c[2]);
    let mut consider = |tau: f64| {
        if tau > lo && tau < hi {
            m = m.max(eval_cubic(c, tau).abs());
        }
    };
    if qa.abs() > 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            consider((-qb - sq) / (2.0 * qa));
            consider((-qb + sq) / (2.0 * qa));
        }
    } else if qb.abs() > 0.0 {
        consider(-qc / qb);
    }
    m
}

/// Certified bound on `max_{t ∈ [t0, t1]} |a_•(t) − a_•(t_c)|` for the three
/// position coefficients: sampled deviation over 32 subintervals plus a
/// Lipschitz pad `(Δt/64)·max|a_•′|` covering the gaps between nodes.
fn remainder_bounds(t0: f64, t1: f64, t_c: f64, timing: &TrajTiming) -> [f64; 3] {
    let at_c = affine_pos_coeffs(t_c, timing).expect("midpoint within horizon");
    let at_c = [at_c.0, at_c.1, at_c.2];
    let mut dev = [0.0f64; 3];
    for i in 0..=REMAINDER_NODES {
        let t = t0 + (t1 - t0) * i as f64 / REMAINDER_NODES as f64;
        let a = affine_pos_coeffs(t.min(timing.t_fin()), timing).expect("node within horizon");
        let a = [a.0, a.1, a.2];
        for k in 0..3 {
            dev[k] = dev[k].max((a[k] - at_c[k]).abs());
        }
    }
    // Steps never straddle t_pk, so the whole step lives in one segment and
    // the derivative's cubic form is valid across it.
    let peak_side = t1 <= timing.t_pk() + 1e-12;
    let cubics = vel_cubics(timing, peak_side);
    let (lo, hi) = if peak_side {
        (t0, t1)
    } else {
        (t0 - timing.t_pk(), t1 - timing.t_pk())
    };
    let pad = (t1 - t0) / (2.0 * REMAINDER_NODES as f64);
    let mut r = [0.0f64; 3];
    for k in 0..3 {
        r[k] = dev[k] + pad * max_abs_cubic(&cubics[k], lo.max(0.0), hi);
    }
    r
}

/// Reachable sets of one axis over the whole horizon. Step boundaries are the
/// multiples of `dt_frs` together with `t_pk` and `t_fin`.
pub fn reach_1d(
    bounds: &ParamBounds,
    timing: &TrajTiming,
    dt_frs: f64,
    axis: usize,
) -> Result<Vec<TimedZonotope>, FrsError> {
    ensure_symmetric(bounds)?;
    let grid = time_grid(timing, dt_frs)?;
    let (kv, ka, kpk) = (bounds.kappa_v.hi, bounds.kappa_a.hi, bounds.kappa_pk.hi);
    let mut steps = Vec::with_capacity(grid.len() - 1);
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let t_c = 0.5 * (t0 + t1);
        let (av, aa, apk) = affine_pos_coeffs(t_c, timing).expect("midpoint within horizon");
        let r = remainder_bounds(t0, t1, t_c, timing);
        let eps = r[0] * kv + r[1] * ka + r[2] * kpk;
        let generators = DMatrix::from_row_slice(
            4,
            4,
            &[
                av * kv, aa * ka, apk * kpk, eps, //
                kv, 0.0, 0.0, 0.0, //
                0.0, ka, 0.0, 0.0, //
                0.0, 0.0, kpk, 0.0,
            ],
        );
        let zono = Zonotope::new(DVector::zeros(4), generators, axis_labels(axis).to_vec())
            .map_err(|e| FrsError::BadStructure(e.to_string()))?;
        steps.push(TimedZonotope {
            t_interval: Interval { lo: t0, hi: t1 },
            zono,
        });
    }
    Ok(steps)
}

/// Full 12-dimensional reachable sets: three per-axis blocks stacked
/// block-diagonally. Axes are dynamically decoupled, so the blocks share the
/// same time partition and per-axis geometry.
pub fn reach_3d(
    bounds: &ParamBounds,
    timing: &TrajTiming,
    dt_frs: f64,
) -> Result<TimedFRS, FrsError> {
    let per_axis: Vec<Vec<TimedZonotope>> = (0..3)
        .map(|axis| reach_1d(bounds, timing, dt_frs, axis))
        .collect::<Result<_, _>>()?;
    let mut steps = Vec::with_capacity(per_axis[0].len());
    for i in 0..per_axis[0].len() {
        let zono = Zonotope::block_concat([
            &per_axis[0][i].zono,
            &per_axis[1][i].zono,
            &per_axis[2][i].zono,
        ])
        .map_err(|e| FrsError::BadStructure(e.to_string()))?;
        steps.push(TimedZonotope {
            t_interval: per_axis[0][i].t_interval,
            zono,
        });
    }
    Ok(TimedFRS {
        steps,
        timing: *timing,
        bounds: *bounds,
    })
}

/// One axis's slice of a structured reachable set: centers and generator
/// weights of the 4×4 block plus the accumulated remainder ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBlock {
    pub c_x: f64,
    pub c_v: f64,
    pub c_a: f64,
    pub c_pk: f64,
    pub g_xv: f64,
    pub g_xa: f64,
    pub g_xpk: f64,
    pub g_v: f64,
    pub g_a: f64,
    pub g_pk: f64,
    pub eps: f64,
}

impl AxisBlock {
    /// Structured membership test. The parameter rows are diagonal, so the
    /// generator weights are pinned by κ and the position must land within ε
    /// of the pinned affine combination.
    pub fn contains(&self, pos: f64, kv: f64, ka: f64, kpk: f64, tol: f64) -> bool {
        let beta = |k: f64, c: f64, g: f64| -> Option<f64> {
            if g != 0.0 {
                let b = (k - c) / g;
                (b.abs() <= 1.0 + tol).then_some(b)
            } else {
                ((k - c).abs() <= tol).then_some(0.0)
            }
        };
        let (Some(bv), Some(ba), Some(bp)) = (
            beta(kv, self.c_v, self.g_v),
            beta(ka, self.c_a, self.g_a),
            beta(kpk, self.c_pk, self.g_pk),
        ) else {
            return false;
        };
        let pinned = self.c_x + self.g_xv * bv + self.g_xa * ba + self.g_xpk * bp;
        (pos - pinned).abs() <= self.eps + tol
    }
}

/// Row indices of one axis's (x, κ_v, κ_a, κ_pk) labels.
fn block_rows(z: &Zonotope, axis: usize) -> Result<[usize; 4], FrsError> {
    let mut rows = [0usize; 4];
    for (i, label) in axis_labels(axis).into_iter().enumerate() {
        rows[i] = z.find_row(label).ok_or_else(|| {
            FrsError::BadStructure(format!("missing row {label:?}"))
        })?;
    }
    Ok(rows)
}

/// Decodes and validates the block structure of a 12-dimensional reachable
/// set. Every generator column must touch exactly one axis block, and within
/// it either exactly one parameter row (a κ generator) or only the position
/// row (a remainder generator). Remainder magnitudes accumulate into ε.
pub fn axis_blocks(z: &Zonotope) -> Result<[AxisBlock; 3], FrsError> {
    let rows: Vec<[usize; 4]> = (0..3).map(|a| block_rows(z, a)).collect::<Result<_, _>>()?;
    let g = z.generators();
    let c = z.center();
    let mut blocks = [[0.0f64; 7]; 3]; // g_xv g_xa g_xpk g_v g_a g_pk eps
    for j in 0..z.num_generators() {
        let mut owner: Option<usize> = None;
        for (axis, r) in rows.iter().enumerate() {
            if r.iter().any(|&ri| g[(ri, j)] != 0.0) {
                if owner.is_some() {
                    return Err(FrsError::BadStructure(format!(
                        "generator column {j} couples multiple axes"
                    )));
                }
                owner = Some(axis);
            }
        }
        let Some(axis) = owner else { continue }; // all-zero column
        let r = &rows[axis];
        let b = &mut blocks[axis];
        let (gx, gv, ga, gpk) = (g[(r[0], j)], g[(r[1], j)], g[(r[2], j)], g[(r[3], j)]);
        let param_hits = [gv, ga, gpk].iter().filter(|v| **v != 0.0).count();
        match param_hits {
            0 => b[6] += gx.abs(),
            1 => {
                let (slot, val, xval) = if gv != 0.0 {
                    (3, gv, (0, gx))
                } else if ga != 0.0 {
                    (4, ga, (1, gx))
                } else {
                    (5, gpk, (2, gx))
                };
                if b[slot] != 0.0 {
                    return Err(FrsError::BadStructure(format!(
                        "axis {axis} has two generators on the same parameter row"
                    )));
                }
                b[slot] = val;
                b[xval.0] = xval.1;
            }
            _ => {
                return Err(FrsError::BadStructure(format!(
                    "generator column {j} couples parameter rows within axis {axis}"
                )))
            }
        }
    }
    let mut out = [AxisBlock {
        c_x: 0.0,
        c_v: 0.0,
        c_a: 0.0,
        c_pk: 0.0,
        g_xv: 0.0,
        g_xa: 0.0,
        g_xpk: 0.0,
        g_v: 0.0,
        g_a: 0.0,
        g_pk: 0.0,
        eps: 0.0,
    }; 3];
    for axis in 0..3 {
        let b = &blocks[axis];
        for (slot, name) in [(3, "κ_v"), (4, "κ_a"), (5, "κ_pk")] {
            if b[slot] == 0.0 {
                return Err(FrsError::BadStructure(format!(
                    "axis {axis} is missing its {name} generator"
                )));
            }
        }
        let r = &rows[axis];
        out[axis] = AxisBlock {
            c_x: c[r[0]],
            c_v: c[r[1]],
            c_a: c[r[2]],
            c_pk: c[r[3]],
            g_xv: b[0],
            g_xa: b[1],
            g_xpk: b[2],
            g_v: b[3],
            g_a: b[4],
            g_pk: b[5],
            eps: b[6],
        };
    }
    Ok(out)
}

/// Minkowski-sums a per-axis position error into a structured reachable set:
/// the position-row centers shift by `shift` and the remainder generators
/// grow by `grow` (both per axis). The result is rebuilt in canonical column
/// order, which preserves the set exactly and keeps the block structure
/// decodable.
pub fn augment_position_error(
    tz: &TimedZonotope,
    shift: &Vector3<f64>,
    grow: &Vector3<f64>,
) -> Result<TimedZonotope, FrsError> {
    if grow.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(FrsError::BadStructure(format!(
            "remainder growth must be non-negative, got {grow:?}"
        )));
    }
    let z = &tz.zono;
    let blocks = axis_blocks(z)?;
    let rows: Vec<[usize; 4]> = (0..3).map(|a| block_rows(z, a)).collect::<Result<_, _>>()?;
    let dim = z.dim();
    let mut center = z.center().clone();
    let mut generators = DMatrix::zeros(dim, 12);
    for axis in 0..3 {
        let b = &blocks[axis];
        let r = &rows[axis];
        center[r[0]] += shift[axis];
        let col = 4 * axis;
        generators[(r[0], col)] = b.g_xv;
        generators[(r[1], col)] = b.g_v;
        generators[(r[0], col + 1)] = b.g_xa;
        generators[(r[2], col + 1)] = b.g_a;
        generators[(r[0], col + 2)] = b.g_xpk;
        generators[(r[3], col + 2)] = b.g_pk;
        generators[(r[0], col + 3)] = b.eps + grow[axis];
    }
    let zono = Zonotope::new(center, generators, z.labels().to_vec())
        .map_err(|e| FrsError::BadStructure(e.to_string()))?;
    Ok(TimedZonotope {
        t_interval: tz.t_interval,
        zono,
    })
}

/// Structural invariants checked on load and after construction: the steps
/// partition `[0, t_fin]` with `t_pk` on a boundary, and every step decodes
/// into valid axis blocks whose parameter generators match the bounds.
pub fn validate_structure(frs: &TimedFRS) -> Result<(), FrsError> {
    let t_fin = frs.timing.t_fin();
    let t_pk = frs.timing.t_pk();
    let tol = 1e-9 * t_fin.max(1.0);
    if frs.steps.is_empty() {
        return Err(FrsError::BadStructure("no steps".to_string()));
    }
    if frs.steps[0].t_interval.lo.abs() > tol {
        return Err(FrsError::BadStructure("first step does not start at 0".to_string()));
    }
    if (frs.steps.last().unwrap().t_interval.hi - t_fin).abs() > tol {
        return Err(FrsError::BadStructure("last step does not end at t_fin".to_string()));
    }
    let mut pk_on_boundary = false;
    for (i, s) in frs.steps.iter().enumerate() {
        let iv = s.t_interval;
        if !(iv.hi - iv.lo > 0.0) {
            return Err(FrsError::BadStructure(format!("step {i} has empty interval")));
        }
        if i > 0 && (iv.lo - frs.steps[i - 1].t_interval.hi).abs() > tol {
            return Err(FrsError::BadStructure(format!("gap before step {i}")));
        }
        if (iv.lo - t_pk).abs() <= tol || (iv.hi - t_pk).abs() <= tol {
            pk_on_boundary = true;
        } else if iv.lo < t_pk && t_pk < iv.hi {
            return Err(FrsError::BadStructure(format!("step {i} straddles t_pk")));
        }
        let blocks = axis_blocks(&s.zono)?;
        for (axis, b) in blocks.iter().enumerate() {
            let expect = [
                (b.g_v, frs.bounds.kappa_v.hi, "κ_v"),
                (b.g_a, frs.bounds.kappa_a.hi, "κ_a"),
                (b.g_pk, frs.bounds.kappa_pk.hi, "κ_pk"),
            ];
            for (got, want, name) in expect {
                if (got - want).abs() > 1e-12 * want.max(1.0) {
                    return Err(FrsError::BadStructure(format!(
                        "step {i} axis {axis}: {name} generator {got} does not match bound {want}"
                    )));
                }
            }
            if b.eps < 0.0 {
                return Err(FrsError::BadStructure(format!(
                    "step {i} axis {axis}: negative remainder"
                )));
            }
        }
    }
    if !pk_on_boundary {
        return Err(FrsError::BadStructure("t_pk is not a step boundary".to_string()));
    }
    Ok(())
}

/// Serialized reachable-set artifact. `config_hash` ties it to the exact
/// configuration that produced it; loading under a different configuration
/// is rejected unless explicitly forced by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrsArtifact {
    pub kind: String,
    pub version: u32,
    pub config_hash: String,
    pub dt_frs: f64,
    pub frs: TimedFRS,
}

pub const FRS_KIND: &str = "reachplan-frs";

impl FrsArtifact {
    pub fn new(frs: TimedFRS, dt_frs: f64, config_hash: String) -> Self {
        Self {
            kind: FRS_KIND.to_string(),
            version: FRS_FORMAT_VERSION,
            config_hash,
            dt_frs,
            frs,
        }
    }
}

pub fn save_frs(artifact: &FrsArtifact, path: &Path) -> Result<(), FrsError> {
    let json = serde_json::to_string_pretty(artifact)
        .map_err(|e| FrsError::Format(e.to_string()))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_frs(path: &Path) -> Result<FrsArtifact, FrsError> {
    let text = fs::read_to_string(path)?;
    let artifact: FrsArtifact =
        serde_json::from_str(&text).map_err(|e| FrsError::Format(e.to_string()))?;
    if artifact.kind != FRS_KIND {
        return Err(FrsError::Format(format!(
            "expected kind {FRS_KIND:?}, found {:?}",
            artifact.kind
        )));
    }
    if artifact.version != FRS_FORMAT_VERSION {
        return Err(FrsError::Format(format!(
            "unsupported version {} (this build reads {FRS_FORMAT_VERSION})",
            artifact.version
        )));
    }
    validate_structure(&artifact.frs)?;
    Ok(artifact)
}

/// Test-only tamper hook: a copy of `frs` with every remainder generator
/// (columns touching no κ row) scaled by `factor`. Detector tests shrink the
/// remainder to confirm the independent checkers notice an undersized ε.
#[cfg(test)]
pub(crate) fn scale_remainder_for_test(frs: &TimedFRS, factor: f64) -> TimedFRS {
    let steps = frs
        .steps
        .iter()
        .map(|tz| {
            let z = &tz.zono;
            let kappa_rows: Vec<usize> = z
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, l)| {
                    matches!(l, RowLabel::KappaV(_) | RowLabel::KappaA(_) | RowLabel::KappaPk(_))
                })
                .map(|(r, _)| r)
                .collect();
            let mut g = z.generators().clone();
            for j in 0..g.ncols() {
                if kappa_rows.iter().all(|&r| g[(r, j)] == 0.0) {
                    for r in 0..g.nrows() {
                        g[(r, j)] *= factor;
                    }
                }
            }
            TimedZonotope {
                t_interval: tz.t_interval,
                zono: Zonotope::new(z.center().clone(), g, z.labels().to_vec())
                    .expect("shapes unchanged"),
            }
        })
        .collect();
    TimedFRS {
        steps,
        timing: frs.timing,
        bounds: frs.bounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::{affine_vel_coeffs, ref_point, TrajParam};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn defaults() -> (ParamBounds, TrajTiming) {
        (ParamBounds::default(), TrajTiming::default())
    }

    #[test]
    fn initial_set_matches_parameter_box() {
        let (bounds, _) = defaults();
        let z = initial_set_1d(&bounds, 1).unwrap();
        assert_eq!(z.dim(), 4);
        assert_eq!(z.num_generators(), 4);
        assert_eq!(
            z.labels(),
            &[
                RowLabel::Pos(1),
                RowLabel::KappaV(1),
                RowLabel::KappaA(1),
                RowLabel::KappaPk(1)
            ]
        );
        let want = [(0.0, 0.0), (-5.0, 5.0), (-10.0, 10.0), (-5.0, 5.0)];
        for (row, (lo, hi)) in want.iter().enumerate() {
            let iv = z.project_interval(row);
            assert_eq!(iv.lo, *lo, "row {row}");
            assert_eq!(iv.hi, *hi, "row {row}");
        }
    }

    #[test]
    fn asymmetric_bounds_rejected() {
        let mut bounds = ParamBounds::default();
        bounds.kappa_a = Interval { lo: -4.0, hi: 10.0 };
        let timing = TrajTiming::default();
        assert!(matches!(
            initial_set_1d(&bounds, 0),
            Err(FrsError::AsymmetricBounds(_))
        ));
        assert!(matches!(
            reach_1d(&bounds, &timing, 0.02, 0),
            Err(FrsError::AsymmetricBounds(_))
        ));
    }

    #[test]
    fn time_grid_partitions_horizon() {
        let timing = TrajTiming::default(); // peak at 1, end at 3
        let grid = time_grid(&timing, 0.02).unwrap();
        assert_eq!(grid.len(), 151);
        assert_eq!(grid[0], 0.0);
        assert!(grid.contains(&1.0), "peak time must appear exactly");
        assert_eq!(*grid.last().unwrap(), 3.0);
        for w in grid.windows(2) {
            assert!(w[1] - w[0] > 0.0 && w[1] - w[0] <= 0.02 + 1e-9);
        }

        // Non-divisible step: extra boundaries at the peak and the end.
        let grid = time_grid(&timing, 0.4).unwrap();
        let expect = [0.0, 0.4, 0.8, 1.0, 1.2, 1.6, 2.0, 2.4, 2.8, 3.0];
        assert_eq!(grid.len(), expect.len());
        for (g, e) in grid.iter().zip(expect) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }

        // A step longer than the horizon degenerates to the segment split.
        let grid = time_grid(&timing, 10.0).unwrap();
        assert_eq!(grid, vec![0.0, 1.0, 3.0]);

        assert!(matches!(time_grid(&timing, 0.0), Err(FrsError::BadStep(_))));
        assert!(matches!(time_grid(&timing, -1.0), Err(FrsError::BadStep(_))));
    }

    #[test]
    fn vel_cubics_match_affine_vel_coeffs() {
        let timing = TrajTiming::new(0.6, 1.3, 2.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let t: f64 = rng.gen_range(0.0..timing.t_fin());
            let peak_side = t <= timing.t_pk();
            let cubics = vel_cubics(&timing, peak_side);
            let tau = if peak_side { t } else { t - timing.t_pk() };
            let (dv, da, dpk) = affine_vel_coeffs(t, &timing).unwrap();
            assert!((eval_cubic(&cubics[0], tau) - dv).abs() < 1e-12);
            assert!((eval_cubic(&cubics[1], tau) - da).abs() < 1e-12);
            assert!((eval_cubic(&cubics[2], tau) - dpk).abs() < 1e-12);
        }
    }

    #[test]
    fn max_abs_cubic_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            let lo = rng.gen_range(-2.0..1.0);
            let hi = lo + rng.gen_range(0.1..2.0);
            let exact = max_abs_cubic(&c, lo, hi);
            let mut dense = 0.0f64;
            for i in 0..=2000 {
                let tau = lo + (hi - lo) * i as f64 / 2000.0;
                dense = dense.max(eval_cubic(&c, tau).abs());
            }
            assert!(exact >= dense - 1e-9, "closed form {exact} below dense {dense}");
            assert!(exact <= dense + 1e-4, "closed form {exact} above dense {dense}");
        }
    }

    #[test]
    fn first_step_is_small_and_certified() {
        let (bounds, timing) = defaults();
        let steps = reach_1d(&bounds, &timing, 0.02, 0).unwrap();
        assert_eq!(steps.len(), 150);
        let b = axis_blocks_1d(&steps[0].zono);
        // At the 0.01 s midpoint the position barely moves: a_v ≈ 0.01.
        let (av, aa, apk) = affine_pos_coeffs(0.01, &timing).unwrap();
        assert!((b.g_xv - 5.0 * av).abs() < 1e-12);
        assert!((b.g_xa - 10.0 * aa).abs() < 1e-12);
        assert!((b.g_xpk - 5.0 * apk).abs() < 1e-12);
        assert!(b.eps > 0.0 && b.eps < 0.06, "eps = {}", b.eps);
    }

    /// Wraps a 4-dimensional single-axis step as a 12-dimensional set so the
    /// shared decoder applies.
    fn axis_blocks_1d(z: &Zonotope) -> AxisBlock {
        let axis = match z.labels()[0] {
            RowLabel::Pos(a) => a,
            _ => panic!("unexpected label layout"),
        };
        let others: Vec<usize> = (0..3).filter(|a| *a != axis).collect();
        let pad: Vec<Zonotope> = others
            .iter()
            .map(|&a| initial_set_1d(&ParamBounds::default(), a).unwrap())
            .collect();
        let parts = match axis {
            0 => [z, &pad[0], &pad[1]],
            1 => [&pad[0], z, &pad[1]],
            _ => [&pad[0], &pad[1], z],
        };
        let full = Zonotope::block_concat(parts).unwrap();
        axis_blocks(&full).unwrap()[axis]
    }

    #[test]
    fn constant_speed_trajectory_stays_inside() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.02).unwrap();
        // κ_pk = κ_v with zero acceleration rides at constant velocity.
        let v = nalgebra::Vector3::new(3.0, -2.0, 1.0);
        let k = TrajParam::new(v, nalgebra::Vector3::zeros(), v, &bounds).unwrap();
        for i in 0..=300 {
            let t = 3.0 * i as f64 / 300.0;
            let r = ref_point(t, &k, &timing).unwrap();
            let step = frs.step_covering(t).unwrap();
            let blocks = axis_blocks(&step.zono).unwrap();
            for axis in 0..3 {
                assert!(
                    blocks[axis].contains(r.pos[axis], v[axis], 0.0, v[axis], 1e-9),
                    "t = {t}, axis {axis}"
                );
            }
        }
    }

    #[test]
    fn conservatism_random_parameters() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let unit = |rng: &mut ChaCha8Rng| rng.gen_range(-1.0..1.0);
            let kv = nalgebra::Vector3::from_fn(|_, _| 5.0 * unit(&mut rng));
            let ka = nalgebra::Vector3::from_fn(|_, _| 10.0 * unit(&mut rng));
            let kpk = nalgebra::Vector3::from_fn(|_, _| 5.0 * unit(&mut rng));
            let k = TrajParam::new(kv, ka, kpk, &bounds).unwrap();
            let t = rng.gen_range(0.0..=timing.t_fin());
            let r = ref_point(t, &k, &timing).unwrap();
            let step = frs.step_covering(t).expect("partition covers the horizon");
            let blocks = axis_blocks(&step.zono).unwrap();
            for axis in 0..3 {
                assert!(
                    blocks[axis].contains(r.pos[axis], kv[axis], ka[axis], kpk[axis], 1e-9),
                    "violation at t = {t}, axis {axis}"
                );
            }
        }
    }

    #[test]
    fn block_concat_matches_per_axis_projections() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.1).unwrap();
        for axis in 0..3 {
            let steps_1d = reach_1d(&bounds, &timing, 0.1, axis).unwrap();
            assert_eq!(steps_1d.len(), frs.steps().len());
            for (s3, s1) in frs.steps().iter().zip(&steps_1d) {
                assert_eq!(s3.t_interval, s1.t_interval);
                for (row_label, row_1d) in axis_labels(axis).into_iter().zip(0..4) {
                    let row_3d = s3.zono.find_row(row_label).unwrap();
                    assert_eq!(
                        s3.zono.project_interval(row_3d),
                        s1.zono.project_interval(row_1d)
                    );
                }
            }
        }
    }

    #[test]
    fn structure_validator_accepts_fresh_sets() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.25).unwrap();
        validate_structure(&frs).unwrap();
        for s in frs.steps() {
            assert_eq!(s.zono.num_generators(), 12);
            let blocks = axis_blocks(&s.zono).unwrap();
            for b in blocks {
                assert!(b.g_v == 5.0 && b.g_a == 10.0 && b.g_pk == 5.0);
                assert!(b.eps > 0.0);
                assert_eq!((b.c_x, b.c_v, b.c_a, b.c_pk), (0.0, 0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn structure_validator_rejects_malformed_blocks() {
        let (bounds, timing) = defaults();
        let good = reach_3d(&bounds, &timing, 0.5).unwrap();
        let z = &good.steps()[0].zono;

        // A column spilling into another axis's rows couples the blocks.
        let mut coupled = z.generators().clone();
        coupled[(4, 0)] = 1.0; // axis-1 position row, axis-0 column
        let bad = Zonotope::new(z.center().clone(), coupled, z.labels().to_vec()).unwrap();
        assert!(matches!(axis_blocks(&bad), Err(FrsError::BadStructure(_))));

        // A column hitting two parameter rows of one axis is not diagonal.
        let mut mixed = z.generators().clone();
        mixed[(2, 0)] = 1.0; // κ_a row of axis 0 on the κ_v column
        let bad = Zonotope::new(z.center().clone(), mixed, z.labels().to_vec()).unwrap();
        assert!(matches!(axis_blocks(&bad), Err(FrsError::BadStructure(_))));

        // Dropping a parameter generator loses the block's invertibility.
        let mut missing = z.generators().clone();
        for r in 0..missing.nrows() {
            missing[(r, 2)] = 0.0; // zero out axis-0's κ_pk column
        }
        let bad = Zonotope::new(z.center().clone(), missing, z.labels().to_vec()).unwrap();
        assert!(matches!(axis_blocks(&bad), Err(FrsError::BadStructure(_))));
    }

    #[test]
    fn remainder_is_small_next_to_signal() {
        let (bounds, timing) = defaults();
        let steps = reach_1d(&bounds, &timing, 0.02, 0).unwrap();
        let blocks: Vec<AxisBlock> = steps.iter().map(|s| axis_blocks_1d(&s.zono)).collect();
        let mean_eps: f64 = blocks.iter().map(|b| b.eps).sum::<f64>() / blocks.len() as f64;
        let mean_gxpk: f64 =
            blocks.iter().map(|b| b.g_xpk.abs()).sum::<f64>() / blocks.len() as f64;
        assert!(
            mean_eps < 0.1 * mean_gxpk,
            "mean eps {mean_eps} not within 10% of mean |γ_x,pk| {mean_gxpk}"
        );
    }

    #[test]
    fn halving_the_step_never_inflates_remainders() {
        let (bounds, timing) = defaults();
        let coarse = reach_1d(&bounds, &timing, 0.02, 0).unwrap();
        let fine = reach_1d(&bounds, &timing, 0.01, 0).unwrap();
        for f in &fine {
            let mid = 0.5 * (f.t_interval.lo + f.t_interval.hi);
            let c = coarse
                .iter()
                .find(|c| c.t_interval.contains(mid))
                .expect("coarse partition covers the fine step");
            let eps_f = axis_blocks_1d(&f.zono).eps;
            let eps_c = axis_blocks_1d(&c.zono).eps;
            assert!(
                eps_f <= eps_c + 1e-9,
                "refined step [{}, {}] grew eps: {eps_f} > {eps_c}",
                f.t_interval.lo,
                f.t_interval.hi
            );
        }
    }

    #[test]
    fn augmentation_shifts_centers_and_grows_remainders() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.5).unwrap();
        let tz = &frs.steps()[2];
        let before = axis_blocks(&tz.zono).unwrap();

        // Zero error: the set is unchanged block-for-block.
        let same =
            augment_position_error(tz, &Vector3::zeros(), &Vector3::zeros()).unwrap();
        assert_eq!(axis_blocks(&same.zono).unwrap(), before);
        assert_eq!(same.t_interval, tz.t_interval);

        // A body box alone grows every position remainder by its half-width.
        let body = augment_position_error(tz, &Vector3::zeros(), &Vector3::repeat(0.27)).unwrap();
        for (b, a) in axis_blocks(&body.zono).unwrap().iter().zip(&before) {
            assert_eq!(b.eps, a.eps + 0.27);
            assert_eq!(b.c_x, a.c_x);
            assert_eq!((b.g_xv, b.g_xa, b.g_xpk), (a.g_xv, a.g_xa, a.g_xpk));
        }

        // An asymmetric error box translates and widens the position
        // projection exactly, leaving the parameter rows untouched.
        let shift = Vector3::new(0.01, -0.02, 0.0);
        let grow = Vector3::new(0.05, 0.003, 0.4);
        let aug = augment_position_error(tz, &shift, &grow).unwrap();
        for axis in 0..3 {
            let row = tz.zono.find_row(RowLabel::Pos(axis)).unwrap();
            let old = tz.zono.project_interval(row);
            let new = aug.zono.project_interval(row);
            assert!((new.lo - (old.lo + shift[axis] - grow[axis])).abs() < 1e-12);
            assert!((new.hi - (old.hi + shift[axis] + grow[axis])).abs() < 1e-12);
            for label in [
                RowLabel::KappaV(axis),
                RowLabel::KappaA(axis),
                RowLabel::KappaPk(axis),
            ] {
                let r = tz.zono.find_row(label).unwrap();
                assert_eq!(tz.zono.project_interval(r), aug.zono.project_interval(r));
            }
        }

        assert!(matches!(
            augment_position_error(tz, &Vector3::zeros(), &Vector3::new(0.1, -0.1, 0.0)),
            Err(FrsError::BadStructure(_))
        ));
    }

    #[test]
    fn step_covering_boundaries() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.5).unwrap();
        assert_eq!(frs.step_covering(0.0).unwrap().t_interval.lo, 0.0);
        assert_eq!(frs.step_covering(3.0).unwrap().t_interval.hi, 3.0);
        let s = frs.step_covering(0.5).unwrap();
        assert!(s.t_interval.contains(0.5));
        let s = frs.step_covering(1.7).unwrap();
        assert!(s.t_interval.lo <= 1.7 && 1.7 <= s.t_interval.hi);
        assert!(frs.step_covering(3.0 + 1e-9).is_none());
        assert!(frs.step_covering(-1e-9).is_none());
        assert!(frs.step_covering(f64::NAN).is_none());
    }

    #[test]
    fn artifact_roundtrip_is_exact_and_guarded() {
        let (bounds, timing) = defaults();
        let frs = reach_3d(&bounds, &timing, 0.25).unwrap();
        let artifact = FrsArtifact::new(frs, 0.25, "cfg-hash-0123".to_string());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frs.json");
        save_frs(&artifact, &path).unwrap();

        let loaded = load_frs(&path).unwrap();
        assert_eq!(loaded, artifact);

        // Saving twice produces identical bytes.
        let path2 = dir.path().join("frs2.json");
        save_frs(&loaded, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());

        // Config guards.
        let other_timing = TrajTiming::new(0.75, 1.0, 2.5).unwrap();
        assert!(matches!(
            loaded.frs.validate_against(&other_timing, &bounds),
            Err(FrsError::ConfigMismatch(_))
        ));
        let other_bounds = ParamBounds::symmetric(4.0, 10.0, 5.0);
        assert!(matches!(
            loaded.frs.validate_against(&timing, &other_bounds),
            Err(FrsError::ConfigMismatch(_))
        ));
        loaded.frs.validate_against(&timing, &bounds).unwrap();

        // Truncated file fails to parse.
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_frs(&path), Err(FrsError::Format(_))));

        // Unknown kind and future version are rejected.
        let mut tampered: FrsArtifact = serde_json::from_str(&text).unwrap();
        tampered.kind = "something-else".to_string();
        save_frs(&tampered, &path).unwrap();
        assert!(matches!(load_frs(&path), Err(FrsError::Format(_))));
        let mut tampered: FrsArtifact = serde_json::from_str(&text).unwrap();
        tampered.version = FRS_FORMAT_VERSION + 1;
        save_frs(&tampered, &path).unwrap();
        assert!(matches!(load_frs(&path), Err(FrsError::Format(_))));
    }
}
