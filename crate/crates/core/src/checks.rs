//! Independent verification oracles for the two safety-critical claims:
//! reachable-set conservatism and the parameter-space obstacle inversion.
//!
//! Both checkers re-derive their verdicts directly from the reference
//! trajectory definition — dense parameter grids and time sweeps — rather
//! than through the zonotope algebra they scrutinize, so a defect in the
//! production path cannot vouch for itself. They back the `verify` command
//! and the acceptance suite; the detector tests below confirm they fire
//! when an artifact is deliberately corrupted.

use std::fmt;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frs::{axis_blocks, AxisBlock, FrsError, TimedFRS};
use crate::geometry::{Box3, Interval};
use crate::planner::{error_augment, intersect_obs, ErrorModel, PlanError};
use crate::traj::{affine_pos_coeffs, ref_point, ParamBounds, TrajParam};

/// Outcome of one sampling suite. `violations == 0` means the property held
/// on every sample; `detail` is a one-line human summary for reports.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub samples: u64,
    pub violations: u64,
    pub detail: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} samples, {} violations ({})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.violations,
            self.detail
        )
    }
}

fn draw<R: Rng>(rng: &mut R, iv: &Interval) -> f64 {
    rng.gen_range(iv.lo..=iv.hi)
}

fn sample_param<R: Rng>(rng: &mut R, bounds: &ParamBounds) -> TrajParam {
    let k_v = Vector3::from_fn(|_, _| draw(rng, &bounds.kappa_v));
    let k_a = Vector3::from_fn(|_, _| draw(rng, &bounds.kappa_a));
    let k_pk = Vector3::from_fn(|_, _| draw(rng, &bounds.kappa_pk));
    TrajParam::new(k_v, k_a, k_pk, bounds).expect("sampled inside the box")
}

/// Index of the first step whose closed interval covers `t`; boundary times
/// belong to both neighbors and either answer is a valid cover.
fn step_index(frs: &TimedFRS, t: f64) -> Option<usize> {
    let steps = frs.steps();
    let idx = steps.partition_point(|s| s.t_interval.hi < t);
    steps.get(idx).filter(|s| s.t_interval.contains(t)).map(|_| idx)
}

/// Conservatism suite: for random parameters inside the box and random times
/// inside the horizon, the reference position must lie within ε of the
/// covering step's pinned affine combination — the containment contract the
/// planner's entire safety argument rests on.
pub fn frs_conservatism(
    frs: &TimedFRS,
    n_samples: u64,
    seed: u64,
) -> Result<CheckReport, FrsError> {
    let timing = frs.timing();
    let bounds = frs.bounds();
    let blocks: Vec<[AxisBlock; 3]> = frs
        .steps()
        .iter()
        .map(|tz| axis_blocks(&tz.zono))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    let mut min_slack = f64::INFINITY;
    let pin = |k: f64, c: f64, g: f64| if g != 0.0 { (k - c) / g } else { 0.0 };
    for _ in 0..n_samples {
        let t = rng.gen_range(0.0..=timing.t_fin());
        let k = sample_param(&mut rng, bounds);
        let r = ref_point(t, &k, timing).expect("sampled time within the horizon");
        let Some(idx) = step_index(frs, t) else {
            violations += 1;
            continue;
        };
        for axis in 0..3 {
            let b = &blocks[idx][axis];
            let pinned = b.c_x
                + b.g_xv * pin(k.k_v()[axis], b.c_v, b.g_v)
                + b.g_xa * pin(k.k_a()[axis], b.c_a, b.g_a)
                + b.g_xpk * pin(k.k_pk()[axis], b.c_pk, b.g_pk);
            let slack = b.eps - (r.pos[axis] - pinned).abs();
            min_slack = min_slack.min(slack);
            if slack < -1e-9 {
                violations += 1;
            }
        }
    }
    Ok(CheckReport {
        name: "frs-conservatism",
        samples: n_samples,
        violations,
        detail: format!("min ε slack {min_slack:.3e} m"),
    })
}

/// Knobs for the obstacle-inversion oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub instances: u64,
    /// κ_pk grid pitch, m/s.
    pub grid_step: f64,
    pub seed: u64,
    /// Body-box half side, m.
    pub body_half: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 50,
            grid_step: 0.05,
            seed: 7,
            body_half: 0.27,
        }
    }
}

/// Obstacle-inversion suite. For random initial conditions, steps, and
/// obstacles, the unsafe-parameter box computed in closed form must agree
/// with a brute-force κ_pk grid in three directions per axis:
///
/// * every grid point whose pinned slice touches the obstacle lies inside
///   the returned box (completeness of the exclusion);
/// * the returned box overshoots the marked hull by at most one grid cell
///   (tightness — the inversion does not silently discard flyable space);
/// * any grid point whose swept, error-inflated reference trajectory hits
///   the obstacle lies inside the returned box with no slack at all
///   (soundness against the raw trajectory definition, independent of the
///   slice abstraction).
pub fn inversion_oracle(
    frs: &TimedFRS,
    model: &ErrorModel,
    oc: &OracleConfig,
) -> Result<CheckReport, PlanError> {
    let timing = frs.timing();
    let bounds = frs.bounds();
    let body = Box3::cube(2.0 * oc.body_half).expect("positive body side");
    let dk = oc.grid_step;
    let kpk_lo = bounds.kappa_pk.lo;
    let kpk_hi = bounds.kappa_pk.hi;
    let n_grid = ((kpk_hi - kpk_lo) / dk).round().max(1.0) as usize;
    let steps = frs.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(oc.seed);
    // Violation counts by direction: completeness, tightness, sweep.
    let mut missed_marks = 0u64;
    let mut overshoot = 0u64;
    let mut missed_sweep = 0u64;
    let mut nontrivial = 0u64;
    let pin = |k: f64, c: f64, g: f64| {
        if g != 0.0 {
            ((k - c) / g).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    };
    for _ in 0..oc.instances {
        // Mid-to-late steps: the earliest ones have negligible peak
        // authority and produce only degenerate instances.
        let si = rng.gen_range(steps.len() / 4..steps.len());
        let k_v =
            Vector3::from_fn(|_, _| rng.gen_range(0.5 * bounds.kappa_v.lo..=0.5 * bounds.kappa_v.hi));
        let k_a =
            Vector3::from_fn(|_, _| rng.gen_range(0.3 * bounds.kappa_a.lo..=0.3 * bounds.kappa_a.hi));
        let aug = error_augment(frs, model, &k_v, &body)?;
        let zeps = &aug[si];
        let blocks = axis_blocks(&zeps.zono)?;
        // Place the obstacle near the reachable slab so instances are
        // non-trivial on every axis.
        let o_center = Vector3::from_fn(|i, _| {
            let b = &blocks[i];
            let r = b.g_xv.abs() + b.g_xa.abs() + b.g_xpk.abs() + b.eps;
            rng.gen_range(b.c_x - 0.8 * r..=b.c_x + 0.8 * r)
        });
        let o = Box3::new(o_center, Vector3::from_fn(|_, _| rng.gen_range(0.3..1.5)))
            .expect("positive half extents");
        let got = intersect_obs(zeps, &o, &k_v, &k_a)?;
        if got.is_some() {
            nontrivial += 1;
        }
        // The same error box the augmentation consumed, for the raw sweep.
        let eb = model.query_interval(zeps.t_interval, &k_v).map_err(PlanError::from)?;
        let nodes: Vec<(f64, f64, f64)> = (0..=64)
            .map(|ti| {
                let t = zeps.t_interval.lo
                    + (zeps.t_interval.hi - zeps.t_interval.lo) * ti as f64 / 64.0;
                affine_pos_coeffs(t, timing).expect("step inside the horizon")
            })
            .collect();
        // Per-axis hit sets. A κ_pk vector is unsafe iff it hits on every
        // axis, so the unsafe set is the product of these; per-axis checks
        // against the returned box are meaningful only when no factor is
        // empty.
        let mut slice_hits: [Vec<f64>; 3] = Default::default();
        let mut sweep_hits: [Vec<f64>; 3] = Default::default();
        for axis in 0..3 {
            let b = &blocks[axis];
            let pinned0 = b.c_x
                + b.g_xv * pin(k_v[axis], b.c_v, b.g_v)
                + b.g_xa * pin(k_a[axis], b.c_a, b.g_a);
            for gi in 0..=n_grid {
                let kpk = (kpk_lo + dk * gi as f64).min(kpk_hi);
                // Brute-force collision label under the set semantics the
                // closed form inverts: the pinned slice `pinned(κ_pk) ± ε`
                // meets the (closed) obstacle interval.
                let p = pinned0 + b.g_xpk * pin(kpk, b.c_pk, b.g_pk);
                if p + b.eps >= o.lo()[axis] && p - b.eps <= o.hi()[axis] {
                    slice_hits[axis].push(kpk);
                }
                // Raw reference sweep: where the error-inflated trajectory
                // itself meets the obstacle, independent of the slice
                // abstraction.
                let (mut lo_p, mut hi_p) = (f64::INFINITY, f64::NEG_INFINITY);
                for (av, aa, apk) in &nodes {
                    let p = av * k_v[axis] + aa * k_a[axis] + apk * kpk;
                    lo_p = lo_p.min(p);
                    hi_p = hi_p.max(p);
                }
                if hi_p + eb.hi[axis] + oc.body_half >= o.lo()[axis]
                    && lo_p + eb.lo[axis] - oc.body_half <= o.hi()[axis]
                {
                    sweep_hits[axis].push(kpk);
                }
            }
        }
        let all_slice = slice_hits.iter().all(|m| !m.is_empty());
        let all_sweep = sweep_hits.iter().all(|m| !m.is_empty());
        for axis in 0..3 {
            let interval = got.map(|bx| (bx.lo()[axis], bx.hi()[axis]));
            let in_interval = |kpk: f64| {
                matches!(interval, Some((lo, hi)) if lo - 1e-9 <= kpk && kpk <= hi + 1e-9)
            };
            // Completeness: every vector of slice-marked components must be
            // excluded, so each component must lie in the box's axis
            // interval.
            if all_slice {
                for &kpk in &slice_hits[axis] {
                    if !in_interval(kpk) {
                        missed_marks += 1;
                    }
                }
            }
            // Sweep soundness, no slack: vectors whose swept trajectory hits
            // on every axis must be excluded too.
            if all_sweep {
                for &kpk in &sweep_hits[axis] {
                    if !in_interval(kpk) {
                        missed_sweep += 1;
                    }
                }
            }
            // Tightness: the returned interval may overshoot this axis's
            // marked hull by at most one grid cell.
            if let Some((lo, hi)) = interval {
                match slice_hits[axis].as_slice() {
                    [] => {
                        if hi - lo >= dk + 1e-9 {
                            overshoot += 1;
                        }
                    }
                    m => {
                        if lo < m.first().unwrap() - dk - 1e-9
                            || hi > m.last().unwrap() + dk + 1e-9
                        {
                            overshoot += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(CheckReport {
        name: "inversion-oracle",
        samples: oc.instances,
        violations: missed_marks + overshoot + missed_sweep,
        detail: format!(
            "{nontrivial}/{} instances with a non-empty unsafe set, κ_pk grid {dk} m/s; \
             misses by direction: completeness {missed_marks}, tightness {overshoot}, \
             sweep {missed_sweep}",
            oc.instances
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frs::scale_remainder_for_test;
    use crate::test_fixtures::{frs_coarse, tiny_table};

    #[test]
    fn conservatism_holds_on_fixture() {
        let rep = frs_conservatism(frs_coarse(), 20_000, 1).unwrap();
        assert!(rep.passed(), "{rep}");
        assert_eq!(rep.samples, 20_000);
    }

    #[test]
    fn conservatism_detects_shrunken_remainder() {
        let bad = scale_remainder_for_test(frs_coarse(), 0.0);
        let rep = frs_conservatism(&bad, 20_000, 1).unwrap();
        assert!(!rep.passed(), "tampered remainder went unnoticed: {rep}");
    }

    #[test]
    fn oracle_agrees_on_fixture() {
        let model = ErrorModel::Table(tiny_table());
        let oc = OracleConfig { instances: 12, seed: 9, ..OracleConfig::default() };
        let rep = inversion_oracle(frs_coarse(), &model, &oc).unwrap();
        assert!(rep.passed(), "{rep}");
        assert!(rep.detail.starts_with(|c: char| c.is_ascii_digit()));
    }

    #[test]
    fn oracle_works_with_constant_model() {
        let model = ErrorModel::Constant(0.3);
        let oc = OracleConfig { instances: 8, seed: 3, ..OracleConfig::default() };
        let rep = inversion_oracle(frs_coarse(), &model, &oc).unwrap();
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn oracle_detects_shrunken_remainder() {
        let bad = scale_remainder_for_test(frs_coarse(), 0.0);
        let model = ErrorModel::Table(tiny_table());
        let oc = OracleConfig { instances: 12, seed: 9, ..OracleConfig::default() };
        let rep = inversion_oracle(&bad, &model, &oc).unwrap();
        assert!(!rep.passed(), "tampered remainder went unnoticed: {rep}");
    }
}
