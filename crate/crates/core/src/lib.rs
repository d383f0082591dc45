//! Holistic skeleton fitting to 2D keypoint sequences.
//!
//! The fitting energy combines joint reprojection, pose/shape/bending
//! priors, temporal smoothness, joint-angle limits and biomechanical hand
//! constraints, minimized in a five-stage schedule with Adam or L-BFGS.
//! Alongside the fitter the crate ships vector-quantization codebook math
//! and the evaluation metrics used for sign-motion generation benchmarks.

pub mod body_model;
pub mod dual;
pub mod error;
pub mod io;
pub mod keypoints;
pub mod metrics;
pub mod objective;
pub mod optimizer;
pub mod par;
pub mod quantize;
pub mod synth;
pub mod validate;

pub use error::{Error, Result};
