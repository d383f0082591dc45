//! 2D keypoint ingestion, confidence-guided fusion and gap filling.

mod fuse;
mod sequence;

pub use fuse::{fill_missing, fuse_confidence_guided, DEFAULT_THRESHOLD};
pub use sequence::{
    parse_keypoints, parse_keypoints_str, write_keypoints, Group, GroupLayout, Keypoint, KeypointFrame,
    KeypointSequence, ResolvedLayout,
};
