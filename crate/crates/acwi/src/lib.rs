//! Training library for adaptive curiosity-weighted intrinsic rewards (ACWI).
//!
//! The crate implements a small self-contained reinforcement-learning stack:
//!
//! * [`nn`] — a minimal reverse-mode autodiff tape over `f64` matrices,
//!   multilayer perceptrons, an Adam optimizer with global-norm gradient
//!   clipping, and flat checkpoint serialization.
//! * [`env`] — deterministic grid-world environments with egocentric
//!   observations and a scripted solvability checker.
//! * [`icm`] — an intrinsic curiosity module (forward + inverse dynamics on a
//!   learned feature space) producing per-step novelty signals.
//! * [`beta`] — a state-dependent scale network for intrinsic rewards trained
//!   against a correlation objective.
//! * [`ppo`] — rollout storage, generalized advantage estimation, and the
//!   clipped-surrogate policy update.
//! * [`trainer`] — the outer training loop wiring the pieces together, with
//!   metrics, checkpoints, and deterministic resume.
//! * [`config`] — run configuration, TOML parsing, and override handling.
//! * [`analysis`] — post-hoc aggregation: learning curves, scale-factor
//!   histograms, visitation heatmaps, and power-iteration PCA.

pub mod analysis;
pub mod beta;
pub mod config;
pub mod env;
pub mod error;
pub mod icm;
pub mod nn;
pub mod ppo;
pub mod trainer;
