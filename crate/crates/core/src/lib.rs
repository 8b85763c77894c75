//! Deterministic training and approximate unlearning for small feed-forward
//! networks.
//!
//! The crate is organized around the weight-space view of SGD:
//!
//! * [`nn`] — a minimal MLP engine with exact reverse-mode gradients and the
//!   four loss variants (cross-entropy, SD, `l2`, Hessian-diagonal).
//! * [`hessian`] — Hessian-vector products, a dense finite-difference oracle
//!   for tiny models, and top-singular-value estimation by power iteration.
//! * [`unrolled`] — the unrolled-SGD predictor (first-order gradient sum plus
//!   the recursive curvature correction) and the unlearning-error metric.
//! * [`unlearn`] — instrumented training, single-gradient and amnesiac
//!   unlearning, the retraining oracle, and the paired experiment that
//!   measures verification error against it.
//! * [`analysis`] — correlation statistics, the privacy-risk-score pipeline,
//!   Gaussian-mixture bound checks, the binary-classifier landscape, and the
//!   SISA cost arithmetic.
//!
//! Everything is pure and seed-deterministic: the same inputs produce
//! bit-identical outputs single-threaded.

pub mod analysis;
pub mod data;
pub mod error;
pub mod hessian;
pub mod io;
pub mod nn;
pub mod objective;
pub mod rng;
pub mod unlearn;
pub mod unrolled;
pub mod vector;

pub use error::{Error, Result};
pub use vector::ParamVector;
