//! Adam, L-BFGS with a strong-Wolfe line search, and the staged fit.

mod adam;
mod fit;
mod init;
mod lbfgs;
mod line_search;

pub use adam::{adam_step, AdamParams, AdamState};
pub use fit::{
    fit_sequence, freeze_shape_mean, FitConfig, FitReport, OptimizerKind, StageReport, StageSpec, StepRecord,
};
pub use init::{initialize, DEFAULT_DEPTH};
pub use lbfgs::{
    lbfgs_step, minimize_lbfgs, AcceptedStep, Lbfgs, LbfgsHistory, LbfgsParams, LbfgsRun, StepStatus, CURVATURE_GUARD,
};
pub use line_search::{line_search_strong_wolfe, LineSearchResult, WolfeParams};
