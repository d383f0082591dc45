use std::collections::HashSet;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Offset from the parent joint in the parent's frame, meters.
    pub rest_offset: [f64; 3],
    /// One row per shape coefficient, meters per unit.
    pub shape_basis: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandJointIndices {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Elbow/knee entry for the bending prior. Positive rotation about `axis`
/// is hyperextension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendJoint {
    pub joint: usize,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsets {
    /// Body joints pulled toward the neutral pose by the smoothness term.
    pub smooth_body: Vec<usize>,
    /// Hand joints pulled toward the neutral pose by the smoothness term.
    pub smooth_hand: Vec<usize>,
    /// Joints whose rotation angle is bounded by the angle-limit term.
    pub angle_limit: Vec<usize>,
    pub bend: Vec<BendJoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

/// Gaussian prior over the non-root body rows followed by the hand rows,
/// flattened in 6D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosePrior {
    pub mean: Vec<f64>,
    pub precision: Precision,
}

/// Per-hand anatomy used by the biomechanical terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandAnatomy {
    pub wrist: usize,
    /// First joint of the index, middle, ring and little fingers, in order
    /// across the palm.
    pub palm_roots: Vec<usize>,
    /// Joint chains from the first finger joint to the fingertip.
    pub fingers: Vec<Vec<usize>>,
    /// Palm normal in the rest frame (flexion direction).
    pub palm_normal: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hands {
    pub left: HandAnatomy,
    pub right: HandAnatomy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonModel {
    pub joints: Vec<Joint>,
    pub shape_dim: usize,
    pub expression_dim: usize,
    pub body_joint_count: usize,
    pub hand_joint_indices: HandJointIndices,
    pub jaw_joint_index: usize,
    pub subsets: Subsets,
    pub pose_prior: PosePrior,
    pub hands: Hands,
    #[serde(skip)]
    slots: Vec<Option<usize>>,
}

/// Which group a rotation row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowGroup {
    Body,
    Hand,
    Jaw,
}

impl SkeletonModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        joints: Vec<Joint>,
        shape_dim: usize,
        expression_dim: usize,
        body_joint_count: usize,
        hand_joint_indices: HandJointIndices,
        jaw_joint_index: usize,
        subsets: Subsets,
        pose_prior: PosePrior,
        hands: Hands,
    ) -> Result<Self> {
        let mut model = SkeletonModel {
            joints,
            shape_dim,
            expression_dim,
            body_joint_count,
            hand_joint_indices,
            jaw_joint_index,
            subsets,
            pose_prior,
            hands,
            slots: Vec::new(),
        };
        model.finalize()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut model: SkeletonModel = io::read_json(path.as_ref())?;
        model.finalize()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_json(path.as_ref(), self)
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn hand_joint_count(&self) -> usize {
        self.hand_joint_indices.left.len()
    }

    /// Number of 6D rotation rows: body, then left and right hand, then jaw.
    pub fn row_count(&self) -> usize {
        self.body_joint_count + 2 * self.hand_joint_count() + 1
    }

    /// Rotation row driving `joint`, if any.
    pub fn slot(&self, joint: usize) -> Option<usize> {
        self.slots[joint]
    }

    pub fn row_group(&self, row: usize) -> RowGroup {
        let b = self.body_joint_count;
        if row < b {
            RowGroup::Body
        } else if row < b + 2 * self.hand_joint_count() {
            RowGroup::Hand
        } else {
            RowGroup::Jaw
        }
    }

    /// Length of the flattened pose-prior vector.
    pub fn prior_dim(&self) -> usize {
        (self.body_joint_count - 1 + 2 * self.hand_joint_count()) * 6
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn children(&self, joint: usize) -> impl Iterator<Item = usize> + '_ {
        self.joints
            .iter()
            .enumerate()
            .filter(move |(_, j)| j.parent == Some(joint))
            .map(|(i, _)| i)
    }

    /// Offset of `joint` from its parent for the given shape coefficients.
    pub fn shaped_offset(&self, joint: usize, shape: &[f64]) -> Vector3<f64> {
        let j = &self.joints[joint];
        let mut o = Vector3::from(j.rest_offset);
        for (row, &b) in j.shape_basis.iter().zip(shape) {
            o += Vector3::from(*row) * b;
        }
        o
    }

    /// Vertical extent of the rest skeleton.
    pub fn height(&self) -> f64 {
        let mut pos = vec![Vector3::zeros(); self.joints.len()];
        for (i, j) in self.joints.iter().enumerate() {
            pos[i] = match j.parent {
                Some(p) => pos[p] + Vector3::from(j.rest_offset),
                None => Vector3::from(j.rest_offset),
            };
        }
        let (lo, hi) = pos.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
        hi - lo
    }

    fn finalize(&mut self) -> Result<()> {
        let n = self.joints.len();
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if n == 0 {
            return bad("model has no joints".into());
        }
        let roots = self.joints.iter().filter(|j| j.parent.is_none()).count();
        if roots != 1 || self.joints[0].parent.is_some() {
            return bad(format!("expected joint 0 to be the only root, found {roots} roots"));
        }
        let mut names = HashSet::new();
        for (i, j) in self.joints.iter().enumerate() {
            if !names.insert(j.name.as_str()) {
                return bad(format!("duplicate joint name {}", j.name));
            }
            if let Some(p) = j.parent {
                if p >= i {
                    return bad(format!("joint {} has parent {p} not before it", j.name));
                }
            }
            if j.shape_basis.len() != self.shape_dim {
                return bad(format!(
                    "joint {} has {} shape rows, expected {}",
                    j.name,
                    j.shape_basis.len(),
                    self.shape_dim
                ));
            }
            if j.rest_offset
                .iter()
                .chain(j.shape_basis.iter().flatten())
                .any(|x| !x.is_finite())
            {
                return bad(format!("joint {} has non-finite geometry", j.name));
            }
        }
        if self.body_joint_count == 0 || self.body_joint_count > n {
            return bad(format!("body_joint_count {} out of range", self.body_joint_count));
        }
        let h = &self.hand_joint_indices;
        if h.left.len() != h.right.len() {
            return bad("left and right hands have different joint counts".into());
        }
        let mut slots = vec![None; n];
        for j in 0..self.body_joint_count {
            slots[j] = Some(j);
        }
        let hand_rows = h.left.iter().chain(&h.right).copied();
        let jaw = std::iter::once(self.jaw_joint_index);
        for (k, joint) in hand_rows.chain(jaw).enumerate() {
            if joint >= n {
                return bad(format!("hand/jaw joint index {joint} out of range"));
            }
            if slots[joint].is_some() {
                return bad(format!("joint {joint} assigned to more than one pose row"));
            }
            slots[joint] = Some(self.body_joint_count + k);
        }
        let body_range = 0..self.body_joint_count;
        if let Some(&j) = self.subsets.smooth_body.iter().find(|j| !body_range.contains(j)) {
            return bad(format!("smooth_body joint {j} is not a body joint"));
        }
        if let Some(&j) = self
            .subsets
            .smooth_hand
            .iter()
            .find(|j| !h.left.contains(j) && !h.right.contains(j))
        {
            return bad(format!("smooth_hand joint {j} is not a hand joint"));
        }
        for &j in &self.subsets.angle_limit {
            if j >= n || slots[j].is_none() {
                return bad(format!("angle_limit joint {j} has no pose row"));
            }
        }
        for b in &self.subsets.bend {
            if b.joint >= n || slots[b.joint].is_none() {
                return bad(format!("bend joint {} has no pose row", b.joint));
            }
            if Vector3::from(b.axis).norm() < 1e-9 {
                return bad(format!("bend joint {} has a zero axis", b.joint));
            }
            if self.children(b.joint).next().is_none() {
                return bad(format!("bend joint {} has no child bone", b.joint));
            }
        }
        let dim = self.prior_dim();
        if self.pose_prior.mean.len() != dim {
            return bad(format!(
                "pose prior mean has length {}, expected {dim}",
                self.pose_prior.mean.len()
            ));
        }
        match &self.pose_prior.precision {
            Precision::Diagonal(d) if d.len() != dim => {
                return bad(format!("diagonal precision has length {}, expected {dim}", d.len()))
            }
            Precision::Full(m) if m.len() != dim || m.iter().any(|r| r.len() != dim) => {
                return bad(format!("full precision must be {dim}x{dim}"))
            }
            _ => {}
        }
        for hand in [&self.hands.left, &self.hands.right] {
            let all = std::iter::once(hand.wrist)
                .chain(hand.palm_roots.iter().copied())
                .chain(hand.fingers.iter().flatten().copied());
            for j in all {
                if j >= n {
                    return bad(format!("hand anatomy joint {j} out of range"));
                }
            }
            if hand.palm_roots.len() < 2 {
                return bad("a hand needs at least two palm root bones".into());
            }
            for chain in &hand.fingers {
                if chain.len() < 2 {
                    return bad("finger chains need at least two joints".into());
                }
                if self.joints[chain[0]].parent != Some(hand.wrist) {
                    return bad(format!("finger chain root {} is not a wrist child", chain[0]));
                }
                for w in chain.windows(2) {
                    if self.joints[w[1]].parent != Some(w[0]) {
                        return bad(format!("finger chain broken at joint {}", w[1]));
                    }
                }
            }
            for &r in &hand.palm_roots {
                if self.joints[r].parent != Some(hand.wrist) {
                    return bad(format!("palm root {r} is not a wrist child"));
                }
            }
            if Vector3::from(hand.palm_normal).norm() < 1e-9 {
                return bad("palm normal is zero".into());
            }
        }
        self.slots = slots;
        Ok(())
    }
}
