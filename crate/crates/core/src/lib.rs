//! Smoothed-analysis toolkit for the shadow-vertex simplex method.
//!
//! The solver path is [`two_phase::two_phase_solve`]: a random basis is made
//! optimal for a relaxed program, the polar shadow-vertex walk solves that
//! relaxation, and a second walk in one dimension higher interpolates to the
//! original program. [`census`] counts shadows exactly and by enumeration,
//! [`bounds`] evaluates the closed-form smoothed bounds and [`experiment`]
//! runs seeded trial batches.

pub mod bounds;
pub mod census;
pub mod experiment;
pub mod linalg;
pub mod lp;
pub mod random;
pub mod shadow_vertex;
pub mod two_phase;

pub use linalg::{LinalgError, Lu, Mat};
pub use lp::{read_lp, write_lp, Basis, LinearProgram, LpError, SolveResult, Status};
pub use random::{perturb, PerturbationSpec, RngStream};
pub use shadow_vertex::{polar_shadow_vertex, InterpolationObjective, PivotError, ShadowPath};
pub use two_phase::{two_phase_solve, SolveError, TwoPhaseTrace};
