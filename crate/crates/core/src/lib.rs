//! Reachability-guarded receding-horizon trajectory planning for a quadrotor.
//!
//! The pipeline has an offline and an online half:
//!
//! * Offline, [`tracking_error`] characterizes how far the closed-loop
//!   vehicle ([`sim`] dynamics under the [`control`] geometric tracker) can
//!   drift from any member of a parameterized family of desired trajectories
//!   ([`traj`]), producing a lookup table of tracking-error boxes indexed by
//!   time and initial velocity. [`frs`] computes a forward reachable set of
//!   the trajectory family itself as a short list of labeled zonotopes
//!   ([`geometry`]), exact up to a certified per-step remainder.
//! * Online, [`planner`] buffers the reachable set by the tabulated tracking
//!   error plus the vehicle's body box, intersects it with sensed obstacles
//!   to carve an unsafe region out of parameter space, and picks the best
//!   provably-safe trajectory parameter each planning iteration — falling
//!   back on the previous plan's built-in braking maneuver when nothing safe
//!   is found. [`world`] wraps this loop in randomized cluttered-world
//!   trials with an independent collision checker.
//!
//! [`config`] holds the shared parameter set (robot constants, controller
//! gains, timing, discretizations) and the artifact header used to keep
//! offline tables and online planning runs consistent.

pub mod checks;
pub mod config;
pub mod control;
pub mod frs;
pub mod geometry;
pub mod planner;
pub mod sim;
#[cfg(test)]
pub(crate) mod test_fixtures;
pub mod tracking_error;
pub mod traj;
pub mod world;
