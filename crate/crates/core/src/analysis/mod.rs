//! Metrics and analytic checks built on top of the training machinery:
//! correlation statistics, the privacy-risk-score attack, the Gaussian
//! mixture bound checks, the binary-classifier SD-loss analysis, and the
//! SISA cost arithmetic.

pub mod binary;
pub mod bounds;
pub mod prs;
pub mod sisa;
pub mod stats;

pub use binary::{landscape_grid, min_weight_change, sd_loss_binary, sd_loss_binary_grad, LagrangianSolution, LandscapeCell};
pub use bounds::{
    check_corollary1, check_lemma1, check_reverse_bound, BoundScenario, CorollaryReport,
    GridSpec, LemmaReport, ReverseReport, UnlearnRule,
};
pub use prs::{modified_entropy, prs_fit, prs_score, PrsModel};
pub use sisa::{single_gradient_cost_ratio, sisa_breakeven, sisa_cost_ratio};
pub use stats::{pearson, spearman};
