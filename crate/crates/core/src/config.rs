//! The shared parameter set and its plain-text persistence.
//!
//! Every tunable lives in one flat `key = value` file (`#` starts a
//! comment); unspecified keys take the benchmark vehicle's defaults, so an
//! empty file is a complete configuration. [`Config::dump`] is canonical —
//! fixed key order, shortest-roundtrip numerals — and [`Config::hash`] is
//! the SHA-256 of that canonical text. Offline artifacts (the tracking-error
//! table, the reachable-set file) each embed this hash as part of their
//! header, and loaders refuse to mix artifacts produced under a different
//! configuration unless explicitly forced.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::control::Gains;
use crate::geometry::Box3;
use crate::planner::PlannerConfig;
use crate::sim::QuadParams;
use crate::tracking_error::{Cover, TableBuildParams};
use crate::traj::{ParamBounds, TrajTiming};
use crate::world::WorldPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {key:?}")]
    UnknownKey { key: String },
    #[error("bad value for {key}: {value:?} ({detail})")]
    BadValue { key: String, value: String, detail: String },
    #[error("config constraint violated: {0}")]
    Constraint(String),
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        detail: e.to_string(),
    })
}

macro_rules! config_keys {
    ($(($field:ident : $ty:ty = $default:expr, $section:literal)),+ $(,)?) => {
        /// The full flat parameter set. Field names are the config keys.
        #[derive(Debug, Clone, PartialEq)]
        pub struct Config {
            $(pub $field: $ty,)+
        }

        impl Default for Config {
            fn default() -> Self {
                Self { $($field: $default,)+ }
            }
        }

        impl Config {
            fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
                match key {
                    $(stringify!($field) => {
                        self.$field = parse_value(key, value)?;
                        Ok(())
                    })+
                    _ => Err(ConfigError::UnknownKey { key: key.to_string() }),
                }
            }

            /// Canonical plain-text form: every key in fixed order, grouped
            /// by section, values in shortest exact notation. Parsing the
            /// dump reproduces the configuration bit for bit.
            pub fn dump(&self) -> String {
                let mut out = String::new();
                let mut last = "";
                $(
                    if $section != last {
                        if !out.is_empty() {
                            out.push('\n');
                        }
                        out.push_str("# ");
                        out.push_str($section);
                        out.push('\n');
                        last = $section;
                    }
                    out.push_str(stringify!($field));
                    out.push_str(" = ");
                    out.push_str(&self.$field.to_string());
                    out.push('\n');
                )+
                let _ = last;
                out
            }
        }
    };
}

config_keys![
    // Robot constants.
    (mass: f64 = 0.547, "robot"),
    (inertia_x: f64 = 3.3e-3, "robot"),
    (inertia_y: f64 = 3.3e-3, "robot"),
    (inertia_z: f64 = 5.8e-3, "robot"),
    (k_tau: f64 = 1.5e-7, "robot"),
    (k_mu: f64 = 3.75e-9, "robot"),
    (arm_length: f64 = 0.27, "robot"),
    (rotor_min: f64 = 1100.0, "robot"),
    (rotor_max: f64 = 8600.0, "robot"),
    (gravity: f64 = 9.81, "robot"),
    (body_side: f64 = 0.54, "robot"),
    // Controller gains, uniform across axes.
    (gain_x: f64 = 2.0, "control"),
    (gain_v: f64 = 0.5, "control"),
    (gain_r: f64 = 1.0, "control"),
    (gain_w: f64 = 0.03, "control"),
    // Trajectory family: timing and parameter bounds.
    (t_plan: f64 = 0.75, "trajectory"),
    (t_pk: f64 = 1.0, "trajectory"),
    (t_fin: f64 = 3.0, "trajectory"),
    (kappa_v_max: f64 = 5.0, "trajectory"),
    (kappa_a_max: f64 = 10.0, "trajectory"),
    (kappa_pk_max: f64 = 5.0, "trajectory"),
    (v_max: f64 = 5.0, "trajectory"),
    (a_max: f64 = 3.0, "trajectory"),
    // Online planning.
    (d_sense: f64 = 12.0, "planner"),
    (waypoint_dist: f64 = 5.0, "planner"),
    (sim_dt: f64 = 0.005, "planner"),
    (opt_samples: usize = 10_000, "planner"),
    (opt_batch: usize = 1_000, "planner"),
    (deterministic_budget: bool = false, "planner"),
    (replay_check: bool = false, "planner"),
    // Offline artifact resolutions.
    (table_dv: f64 = 0.7, "artifacts"),
    (table_dt: f64 = 0.02, "artifacts"),
    (table_sim_dt: f64 = 0.01, "artifacts"),
    (table_slack: f64 = 0.002, "artifacts"),
    (frs_dt: f64 = 0.02, "artifacts"),
    // Benchmark policy.
    (world_x: f64 = 80.0, "benchmark"),
    (world_y: f64 = 20.0, "benchmark"),
    (world_z: f64 = 10.0, "benchmark"),
    (n_obstacles: usize = 120, "benchmark"),
    (obs_side_min: f64 = 0.5, "benchmark"),
    (obs_side_max: f64 = 3.0, "benchmark"),
    (endpoint_clearance: f64 = 1.0, "benchmark"),
    (goal_radius: f64 = 1.5, "benchmark"),
    (trial_timeout: f64 = 120.0, "benchmark"),
    (constant_buffer: f64 = 0.1, "benchmark"),
    (seed: u64 = 0, "benchmark"),
];

impl FromStr for Config {
    type Err = ConfigError;

    /// Parses `key = value` lines over the defaults; later lines win.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.trim().to_string() });
            };
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    fs::read_to_string(path)?.parse()
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Constraint(msg()))
    }
}

impl Config {
    /// Cross-field validation; every violation names the keys involved.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive: [(&str, f64); 24] = [
            ("mass", self.mass),
            ("inertia_x", self.inertia_x),
            ("inertia_y", self.inertia_y),
            ("inertia_z", self.inertia_z),
            ("k_tau", self.k_tau),
            ("k_mu", self.k_mu),
            ("arm_length", self.arm_length),
            ("gravity", self.gravity),
            ("body_side", self.body_side),
            ("gain_x", self.gain_x),
            ("gain_v", self.gain_v),
            ("gain_r", self.gain_r),
            ("gain_w", self.gain_w),
            ("kappa_v_max", self.kappa_v_max),
            ("kappa_a_max", self.kappa_a_max),
            ("kappa_pk_max", self.kappa_pk_max),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("waypoint_dist", self.waypoint_dist),
            ("world_x", self.world_x),
            ("world_y", self.world_y),
            ("world_z", self.world_z),
            ("goal_radius", self.goal_radius),
            ("trial_timeout", self.trial_timeout),
        ];
        for (key, v) in positive {
            require(v > 0.0 && v.is_finite(), || format!("{key} must be positive, got {v}"))?;
        }
        for (key, v) in [
            ("rotor_min", self.rotor_min),
            ("table_slack", self.table_slack),
            ("endpoint_clearance", self.endpoint_clearance),
            ("constant_buffer", self.constant_buffer),
        ] {
            require(v >= 0.0 && v.is_finite(), || {
                format!("{key} must be nonnegative, got {v}")
            })?;
        }
        require(self.rotor_max > self.rotor_min && self.rotor_max.is_finite(), || {
            format!(
                "rotor_max ({}) must exceed rotor_min ({})",
                self.rotor_max, self.rotor_min
            )
        })?;
        require(
            0.0 < self.t_plan && self.t_plan < self.t_pk && self.t_pk < self.t_fin,
            || {
                format!(
                    "timing must satisfy 0 < t_plan < t_pk < t_fin, got t_plan = {}, \
                     t_pk = {}, t_fin = {}",
                    self.t_plan, self.t_pk, self.t_fin
                )
            },
        )?;
        require(self.sim_dt > 0.0 && self.sim_dt <= self.t_plan, || {
            format!("sim_dt ({}) must lie in (0, t_plan = {}]", self.sim_dt, self.t_plan)
        })?;
        require(self.opt_samples >= 1 && self.opt_batch >= 1, || {
            format!(
                "opt_samples ({}) and opt_batch ({}) must be at least 1",
                self.opt_samples, self.opt_batch
            )
        })?;
        require(self.table_dv > 0.0 && self.table_dv.is_finite(), || {
            format!("table_dv must be positive, got {}", self.table_dv)
        })?;
        require(self.table_dt > 0.0 && self.table_dt <= self.t_fin, || {
            format!("table_dt ({}) must lie in (0, t_fin = {}]", self.table_dt, self.t_fin)
        })?;
        require(
            self.table_sim_dt > 0.0 && self.table_sim_dt <= self.table_dt + 1e-12,
            || {
                format!(
                    "table_sim_dt ({}) must lie in (0, table_dt = {}]",
                    self.table_sim_dt, self.table_dt
                )
            },
        )?;
        require(self.frs_dt > 0.0 && self.frs_dt <= self.t_fin, || {
            format!("frs_dt ({}) must lie in (0, t_fin = {}]", self.frs_dt, self.t_fin)
        })?;
        require(
            self.obs_side_min > 0.0 && self.obs_side_min <= self.obs_side_max,
            || {
                format!(
                    "obstacle sides must satisfy 0 < obs_side_min <= obs_side_max, got \
                     [{}, {}]",
                    self.obs_side_min, self.obs_side_max
                )
            },
        )?;
        // Sensing must cover one replan of travel plus the distance a
        // rest-to-peak-to-rest maneuver at the speed cap sweeps out; the
        // quartic family covers v·t_pk/2 reaching the peak and
        // v·(t_fin−t_pk)/2 braking from it.
        let stopping =
            self.v_max * self.t_pk / 2.0 + self.v_max * (self.t_fin - self.t_pk) / 2.0;
        let need = stopping + self.v_max * self.t_plan;
        require(self.d_sense.is_finite() && self.d_sense + 1e-9 >= need, || {
            format!(
                "d_sense ({}) must be at least the stopping distance plus one replan of \
                 travel: v_max*(t_pk + t_fin - t_pk)/2 + v_max*t_plan = {need}",
                self.d_sense
            )
        })?;
        Ok(())
    }

    /// SHA-256 of the canonical dump, hex-encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.dump().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn quad(&self) -> QuadParams {
        QuadParams {
            mass: self.mass,
            inertia: Vector3::new(self.inertia_x, self.inertia_y, self.inertia_z),
            k_tau: self.k_tau,
            k_mu: self.k_mu,
            arm_length: self.arm_length,
            rotor_min: self.rotor_min,
            rotor_max: self.rotor_max,
            gravity: self.gravity,
        }
    }

    pub fn gains(&self) -> Gains {
        Gains::uniform(self.gain_x, self.gain_v, self.gain_r, self.gain_w)
    }

    pub fn timing(&self) -> TrajTiming {
        TrajTiming::new(self.t_plan, self.t_pk, self.t_fin).expect("validated timing")
    }

    pub fn bounds(&self) -> ParamBounds {
        ParamBounds::symmetric(self.kappa_v_max, self.kappa_a_max, self.kappa_pk_max)
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            quad: self.quad(),
            gains: self.gains(),
            timing: self.timing(),
            bounds: self.bounds(),
            v_max: self.v_max,
            a_max: self.a_max,
            d_sense: self.d_sense,
            waypoint_dist: self.waypoint_dist,
            opt_samples: self.opt_samples,
            opt_batch: self.opt_batch,
            deterministic_budget: self.deterministic_budget,
            replay_check: self.replay_check,
            body_half: self.body_side / 2.0,
            dt_sim: self.sim_dt,
        }
    }

    pub fn world_policy(&self) -> WorldPolicy {
        WorldPolicy {
            bounds: Box3::from_side_lengths(
                Vector3::zeros(),
                Vector3::new(self.world_x, self.world_y, self.world_z),
            )
            .expect("validated world dimensions"),
            n_obstacles: self.n_obstacles,
            side_range: (self.obs_side_min, self.obs_side_max),
            clearance: self.endpoint_clearance,
        }
    }

    pub fn cover(&self) -> Cover {
        Cover::build(self.v_max, self.table_dv, self.table_dt, self.t_fin)
    }

    pub fn table_build(&self) -> TableBuildParams {
        TableBuildParams {
            quad: self.quad(),
            gains: self.gains(),
            timing: self.timing(),
            a_max: self.a_max,
            dt_sim: self.table_sim_dt,
            slack: self.table_slack,
            config_hash: self.hash(),
        }
    }
}
