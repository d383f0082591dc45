//! Single-term entry points over a [`MotionSequence`]. Gradients are laid
//! out as [`ParamLayout`] of the sequence.

use super::eval::{Evaluation, Objective};
use super::limits::BiomechanicalLimits;
use super::weights::{ObjectiveWeights, Term};
use crate::body_model::{CameraIntrinsics, MotionSequence, ParamLayout, SkeletonModel};
use crate::error::Result;
use crate::keypoints::KeypointSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrad {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl From<Evaluation> for ValueGrad {
    fn from(e: Evaluation) -> Self {
        ValueGrad {
            value: e.total,
            gradient: e.gradient,
        }
    }
}

fn dummy_camera() -> CameraIntrinsics {
    CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).expect("unit camera is valid")
}

fn run(
    model: &SkeletonModel,
    cam: Option<&CameraIntrinsics>,
    states: &MotionSequence,
    keypoints: Option<&KeypointSequence>,
    limits: Option<&BiomechanicalLimits>,
    weights: ObjectiveWeights,
) -> Result<ValueGrad> {
    states.check(model)?;
    let cam = cam.cloned().unwrap_or_else(dummy_camera);
    let obj = Objective::new(model, &cam, keypoints, states.len(), limits, weights)?;
    let x = ParamLayout::new(model, states.len()).pack(states);
    Ok(obj.evaluate(&x, true)?.into())
}

/// Robust 2D joint reprojection error, weighted per group and by
/// confidence. `sigma = None` gives plain squared pixel error.
pub fn reprojection_loss(
    model: &SkeletonModel,
    cam: &CameraIntrinsics,
    states: &MotionSequence,
    keypoints: &KeypointSequence,
    w_body: f64,
    w_hand: f64,
    sigma: Option<f64>,
) -> Result<ValueGrad> {
    let mut w = ObjectiveWeights::default().only(Term::Reprojection);
    w.w_body = w_body;
    w.w_hand = w_hand;
    w.robust_sigma = sigma;
    run(model, Some(cam), states, Some(keypoints), None, w)
}

/// Gaussian pose prior over the non-root body rows and hand rows.
pub fn pose_prior(model: &SkeletonModel, states: &MotionSequence) -> Result<ValueGrad> {
    run(
        model,
        None,
        states,
        None,
        None,
        ObjectiveWeights::default().only(Term::PosePrior),
    )
}

/// Exponential penalty on elbow/knee hyperextension with gain `gain`.
pub fn bending_prior(model: &SkeletonModel, states: &MotionSequence, gain: f64) -> Result<ValueGrad> {
    let mut w = ObjectiveWeights::default().only(Term::Bending);
    w.bend_gain = gain;
    run(model, None, states, None, None, w)
}

/// `|beta|^2` and its gradient.
pub fn shape_prior(shape: &[f64]) -> ValueGrad {
    ValueGrad {
        value: shape.iter().map(|b| b * b).sum(),
        gradient: shape.iter().map(|b| 2.0 * b).collect(),
    }
}

/// Neutral-pose pull on the smoothing subsets plus squared first
/// differences of all body and hand rows.
pub fn smooth_loss(model: &SkeletonModel, states: &MotionSequence) -> Result<ValueGrad> {
    run(
        model,
        None,
        states,
        None,
        None,
        ObjectiveWeights::default().only(Term::Smooth),
    )
}

/// Interval penalty on the rotation angle of every angle-limited joint.
pub fn angle_limit_loss(
    model: &SkeletonModel,
    states: &MotionSequence,
    limits: &BiomechanicalLimits,
) -> Result<ValueGrad> {
    run(
        model,
        None,
        states,
        None,
        Some(limits),
        ObjectiveWeights::default().only(Term::Angle),
    )
}

/// `lambda_bl * L_bl + lambda_palm * L_palm + lambda_ja * L_ja`.
pub fn bio_loss(
    model: &SkeletonModel,
    states: &MotionSequence,
    limits: &BiomechanicalLimits,
    weights: &ObjectiveWeights,
) -> Result<ValueGrad> {
    let mut w = weights.only(Term::BoneLength);
    w.lambda_bl = weights.lambda_bl;
    w.lambda_palm = weights.lambda_palm;
    w.lambda_ja = weights.lambda_ja;
    run(model, None, states, None, Some(limits), w)
}

/// Every term with its weight; the breakdown is in the returned
/// [`Evaluation`].
pub fn total_objective(
    model: &SkeletonModel,
    cam: &CameraIntrinsics,
    states: &MotionSequence,
    keypoints: Option<&KeypointSequence>,
    weights: &ObjectiveWeights,
    limits: Option<&BiomechanicalLimits>,
) -> Result<Evaluation> {
    states.check(model)?;
    let obj = Objective::new(model, cam, keypoints, states.len(), limits, weights.clone())?;
    let x = ParamLayout::new(model, states.len()).pack(states);
    obj.evaluate(&x, true)
}
