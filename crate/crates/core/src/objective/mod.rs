//! The fitting energy: reprojection, priors, smoothness, angle limits and
//! biomechanical hand constraints, each with an analytic gradient.

mod eval;
mod hand;
mod hull;
mod interval;
mod limits;
mod terms;
mod weights;

pub use eval::{Evaluation, Objective};
pub use hand::flexion_abduction;
pub use hull::{check_hull, convex_hull_2d, hull_contains, hull_distance, hull_nearest, Point2};
pub use interval::{interval_penalty, Interval};
pub use limits::{default_limits, BiomechanicalLimits, JointHull, JointInterval, PairInterval, ResolvedLimits};
pub use terms::{
    angle_limit_loss, bending_prior, bio_loss, pose_prior, reprojection_loss, shape_prior, smooth_loss,
    total_objective, ValueGrad,
};
pub use weights::{ObjectiveWeights, Term, TermBreakdown};

pub(crate) use hand::{angles_from_direction, finger_joints, palm_measures, v3};
