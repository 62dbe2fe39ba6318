//! Scaling-law toolkit for cross-attention diffusion transformers (Cross-DiT).
//!
//! The crate covers the full desk-scale workflow around training-run data:
//!
//! - [`compute`]: exact parameter counts and FLOP accounting for the
//!   Cross-DiT family (depth/width coupling, per-token training cost).
//! - [`runs`]: ingestion, validation and near-optimal selection of
//!   training-run records (CSV/JSON).
//! - [`powerlaw`]: log-space least-squares fitting of one- and
//!   two-predictor power laws and of IsoFLOP parabolas.
//! - [`surface`]: the two-term-plus-constant loss surface
//!   `L(T,N) = (T_c/T)^a_T + (N_c/N)^a_N + L_inf`, with a multi-start
//!   simplex fitter.
//! - [`alloc`]: compute-optimal model-size allocation, empirical and
//!   predicted, with slope-deviation metrics.
//! - [`sgd`]: a mini-batch SGD oracle on quadratic objectives that
//!   verifies the stepwise-loss theory and generates synthetic run data
//!   with known optimal hyperparameters.
//! - [`presets`]: published constants for the video/image model families,
//!   used by planning and comparison commands.
//!
//! All fitting is deterministic: seeded generators are explicit, fits are
//! closed-form or multi-start with a fixed start grid, and serialization
//! is round-trip precise.

pub mod alloc;
pub mod compute;
pub mod error;
mod linalg;
pub mod powerlaw;
pub mod presets;
pub mod runs;
pub mod sgd;
mod simplex;
pub mod surface;
pub mod units;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
