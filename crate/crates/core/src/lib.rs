//! Volume-normalized DeTurck-Ricci flow of spherically symmetric metrics on
//! the three-sphere, started from corseted (neck-pinched) initial data.
//!
//! The pieces, bottom up:
//!
//! * [`grid`]: staggered mesh on `(0, π)` with pole ghosts, stencils, quadrature
//! * [`geometry`]: metric state, initial data, curvature and integral diagnostics
//! * [`flow`]: evolution equations, time stepping and the run driver
//! * [`classify`]: subcritical / supercritical / undecided decisions
//! * [`critsearch`]: bisection for the critical corseting parameter
//! * [`io`]: CSV profiles and time series, run manifests, config files

pub mod classify;
pub mod critsearch;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;

pub use classify::{Assessment, Assessor, OutcomeKind, PinchDiagnostics, RunOutcome, Verdict};
pub use critsearch::{bisect, BisectionResult, Iteration};
pub use error::{Error, Result};
pub use flow::{evolve, rhs, stable_dt, step, DtPolicy, FlowConfig, Rates, Snapshot};
pub use geometry::{CurvatureProfile, FieldState};
pub use grid::Grid;
pub use io::RunManifest;
