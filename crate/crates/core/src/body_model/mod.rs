//! Parametric skeleton: 6D rotations, shape-dependent rest pose, forward
//! kinematics and pinhole projection.

mod camera;
mod default_model;
mod kinematics;
mod motion;
mod rotation;
mod skeleton;

pub(crate) use camera::project_frame;
pub use camera::{project, CameraIntrinsics, MIN_DEPTH};
pub use default_model::{default_skeleton, BODY_JOINTS, EXPRESSION_DIM, FINGERS, SHAPE_DIM};
pub use kinematics::{forward_kinematics, FkAdjoint, FkFrame, FrameGradient};
pub use motion::{HandMotionSequence, HandState, MotionSequence, MotionState, ParamLayout};
pub use rotation::{
    axis_angle_to_matrix, axis_angle_to_rot6d, geodesic_angle, matrix_to_rot6d, pullback_6d, rot6d_to_matrix,
    rot6d_with_jacobian, IDENTITY_6D,
};
pub use skeleton::{
    BendJoint, HandAnatomy, HandJointIndices, Hands, Joint, PosePrior, Precision, RowGroup, SkeletonModel, Subsets,
};
