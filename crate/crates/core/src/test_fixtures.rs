//! Shared, lazily-built artifacts for in-crate tests: a coarse FRS and a
//! small tracking-error table so individual test modules don't pay the
//! build cost repeatedly.

use std::sync::OnceLock;

use crate::control::Gains;
use crate::frs::{reach_3d, TimedFRS};
use crate::sim::QuadParams;
use crate::tracking_error::{compute_table, Cover, TableBuildParams, TrackingErrorTable};
use crate::traj::{ParamBounds, TrajTiming};

/// Coarse default-parameter FRS (0.1 s steps, 30 steps over the horizon).
pub(crate) fn frs_coarse() -> &'static TimedFRS {
    static FRS: OnceLock<TimedFRS> = OnceLock::new();
    FRS.get_or_init(|| reach_3d(&ParamBounds::default(), &TrajTiming::default(), 0.1).unwrap())
}

/// Small shared table (27 coarse cells, 30 bins) for table-mode tests.
pub(crate) fn tiny_table() -> &'static TrackingErrorTable {
    static TABLE: OnceLock<TrackingErrorTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cover = Cover::build(5.0, 10.0 / 3.0 + 1e-9, 0.1, 3.0);
        let build = TableBuildParams {
            quad: QuadParams::default(),
            gains: Gains::default(),
            timing: TrajTiming::default(),
            a_max: 3.0,
            dt_sim: 0.01,
            slack: 0.002,
            config_hash: "test-fixture".to_string(),
        };
        compute_table(&cover, &build).unwrap()
    })
}
