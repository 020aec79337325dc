//! Mean-field bistability, linear stability and stationary Gaussian
//! fluctuations of a laser-driven optical cavity that contains an interacting
//! Bose-Einstein condensate with an intrinsic cross-Kerr coupling between the
//! cavity photons and the Bogoliubov mode of the condensate.
//!
//! The pipeline for one parameter point is
//!
//! 1. [`model::derive_params`] turns microscopic inputs into the effective
//!    couplings of the single-mode model,
//! 2. [`meanfield::enumerate_branches`] finds every self-consistent photon
//!    number (one or three in the bistable regime),
//! 3. [`dynamics::build_drift_diffusion`] linearises the fluctuations around a
//!    branch and [`dynamics::classify_stability`] decides whether it is stable,
//! 4. [`steadystate::solve_lyapunov`] gives the stationary covariance of a
//!    stable branch, from which entanglement and squeezing follow.
//!
//! [`sweep`] strings these together over one-dimensional parameter grids, and
//! [`verify`] holds the independent oracles used to cross-check every stage.

pub mod dynamics;
pub mod meanfield;
pub mod model;
pub mod steadystate;
pub mod sweep;
pub mod verify;

pub use dynamics::{build_drift_diffusion, classify_stability, DriftDiffusion, StabilityReport};
pub use meanfield::{enumerate_branches, BranchSet, MeanFieldBranch};
pub use model::{derive_params, DerivedParams, SystemParams};
pub use steadystate::{solve_lyapunov, CovarianceMatrix, ObservableSet};
pub use sweep::{run_sweep, SweepRow, SweepSpec};

