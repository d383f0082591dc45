//! Built-in 67-joint holistic skeleton: 23 body joints (root first), a jaw,
//! 2 x 15 finger joints, 10 fingertips and 3 face landmarks.
//!
//! Rest pose is a T-pose in a y-up frame facing +z, subject's left on +x,
//! palms facing down.

use super::rotation::IDENTITY_6D;
use super::skeleton::{
    BendJoint, HandAnatomy, HandJointIndices, Hands, Joint, PosePrior, Precision, SkeletonModel, Subsets,
};

pub const SHAPE_DIM: usize = 10;
pub const EXPRESSION_DIM: usize = 10;

pub const BODY_JOINTS: [&str; 23] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "upper_neck",
    "left_shoulder",
    "right_shoulder",
    "head",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
];

pub const FINGERS: [&str; 5] = ["index", "middle", "ring", "pinky", "thumb"];

// Shape coefficient roles.
const SCALE: usize = 0;
const LEGS: usize = 1;
const ARMS: usize = 2;
const TORSO: usize = 3;
const SHOULDERS: usize = 4;
const HIPS: usize = 5;
const HAND: usize = 6;
const FINGER_LEN: usize = 7;
const HEAD: usize = 8;
const NECK: usize = 9;

struct Builder {
    joints: Vec<Joint>,
}

impl Builder {
    fn add(&mut self, name: &str, parent: Option<&str>, offset: [f64; 3], shape: &[(usize, f64)]) {
        let parent = parent.map(|p| {
            self.joints
                .iter()
                .position(|j| j.name == p)
                .unwrap_or_else(|| panic!("unknown parent {p}"))
        });
        let mut basis = vec![[0.0; 3]; SHAPE_DIM];
        for &(k, gain) in std::iter::once(&(SCALE, 0.03)).chain(shape) {
            for a in 0..3 {
                basis[k][a] += gain * offset[a];
            }
        }
        self.joints.push(Joint {
            name: name.to_string(),
            parent,
            rest_offset: offset,
            shape_basis: basis,
        });
    }

    fn idx(&self, name: &str) -> usize {
        self.joints.iter().position(|j| j.name == name).unwrap()
    }
}

// (first-joint offset from the wrist, lengths of the three following bones)
fn finger_geometry(finger: &str) -> ([f64; 3], [[f64; 3]; 3]) {
    match finger {
        "index" => (
            [0.090, 0.0, 0.025],
            [[0.040, 0.0, 0.0], [0.025, 0.0, 0.0], [0.020, 0.0, 0.0]],
        ),
        "middle" => (
            [0.095, 0.0, 0.005],
            [[0.045, 0.0, 0.0], [0.030, 0.0, 0.0], [0.022, 0.0, 0.0]],
        ),
        "ring" => (
            [0.088, 0.0, -0.015],
            [[0.040, 0.0, 0.0], [0.028, 0.0, 0.0], [0.020, 0.0, 0.0]],
        ),
        "pinky" => (
            [0.080, 0.0, -0.035],
            [[0.030, 0.0, 0.0], [0.020, 0.0, 0.0], [0.018, 0.0, 0.0]],
        ),
        "thumb" => (
            [0.030, -0.015, 0.030],
            [[0.030, 0.0, 0.022], [0.025, 0.0, 0.015], [0.020, 0.0, 0.012]],
        ),
        _ => unreachable!(),
    }
}

fn mirror(v: [f64; 3], side: &str) -> [f64; 3] {
    if side == "left" {
        v
    } else {
        [-v[0], v[1], v[2]]
    }
}

/// The default holistic skeleton.
pub fn default_skeleton() -> SkeletonModel {
    let mut b = Builder { joints: Vec::new() };
    b.add("pelvis", None, [0.0, 0.95, 0.0], &[(LEGS, 0.035)]);
    b.add("left_hip", Some("pelvis"), [0.09, -0.08, 0.0], &[(HIPS, 0.05)]);
    b.add("right_hip", Some("pelvis"), [-0.09, -0.08, 0.0], &[(HIPS, 0.05)]);
    b.add("spine1", Some("pelvis"), [0.0, 0.11, -0.01], &[(TORSO, 0.04)]);
    b.add("left_knee", Some("left_hip"), [0.01, -0.40, 0.0], &[(LEGS, 0.04)]);
    b.add("right_knee", Some("right_hip"), [-0.01, -0.40, 0.0], &[(LEGS, 0.04)]);
    b.add("spine2", Some("spine1"), [0.0, 0.13, 0.0], &[(TORSO, 0.04)]);
    b.add("left_ankle", Some("left_knee"), [0.0, -0.40, -0.03], &[(LEGS, 0.04)]);
    b.add("right_ankle", Some("right_knee"), [0.0, -0.40, -0.03], &[(LEGS, 0.04)]);
    b.add("spine3", Some("spine2"), [0.0, 0.06, 0.02], &[(TORSO, 0.04)]);
    b.add("left_foot", Some("left_ankle"), [0.02, -0.05, 0.12], &[]);
    b.add("right_foot", Some("right_ankle"), [-0.02, -0.05, 0.12], &[]);
    b.add(
        "neck",
        Some("spine3"),
        [0.0, 0.21, -0.03],
        &[(TORSO, 0.04), (NECK, 0.03)],
    );
    b.add("left_collar", Some("spine3"), [0.07, 0.12, -0.01], &[(SHOULDERS, 0.05)]);
    b.add(
        "right_collar",
        Some("spine3"),
        [-0.07, 0.12, -0.01],
        &[(SHOULDERS, 0.05)],
    );
    b.add("upper_neck", Some("neck"), [0.0, 0.05, 0.01], &[(NECK, 0.06)]);
    b.add(
        "left_shoulder",
        Some("left_collar"),
        [0.11, 0.03, -0.01],
        &[(SHOULDERS, 0.05)],
    );
    b.add(
        "right_shoulder",
        Some("right_collar"),
        [-0.11, 0.03, -0.01],
        &[(SHOULDERS, 0.05)],
    );
    b.add(
        "head",
        Some("upper_neck"),
        [0.0, 0.06, 0.03],
        &[(NECK, 0.04), (HEAD, 0.04)],
    );
    b.add("left_elbow", Some("left_shoulder"), [0.26, 0.0, 0.0], &[(ARMS, 0.04)]);
    b.add(
        "right_elbow",
        Some("right_shoulder"),
        [-0.26, 0.0, 0.0],
        &[(ARMS, 0.04)],
    );
    b.add("left_wrist", Some("left_elbow"), [0.25, 0.0, 0.0], &[(ARMS, 0.04)]);
    b.add("right_wrist", Some("right_elbow"), [-0.25, 0.0, 0.0], &[(ARMS, 0.04)]);
    b.add("jaw", Some("head"), [0.0, -0.02, 0.05], &[(HEAD, 0.04)]);

    let mut hand_indices = HandJointIndices {
        left: Vec::new(),
        right: Vec::new(),
    };
    for side in ["left", "right"] {
        for finger in FINGERS {
            let (root, bones) = finger_geometry(finger);
            let wrist = format!("{side}_wrist");
            let j1 = format!("{side}_{finger}1");
            b.add(&j1, Some(&wrist), mirror(root, side), &[(HAND, 0.04)]);
            for k in 2..=3 {
                let name = format!("{side}_{finger}{k}");
                let parent = format!("{side}_{finger}{}", k - 1);
                let off = mirror(bones[k - 2], side);
                b.add(&name, Some(&parent), off, &[(HAND, 0.04), (FINGER_LEN, 0.04)]);
            }
            for k in 1..=3 {
                let idx = b.idx(&format!("{side}_{finger}{k}"));
                match side {
                    "left" => hand_indices.left.push(idx),
                    _ => hand_indices.right.push(idx),
                }
            }
        }
    }
    for side in ["left", "right"] {
        for finger in FINGERS {
            let (_, bones) = finger_geometry(finger);
            let parent = format!("{side}_{finger}3");
            let off = mirror(bones[2], side);
            b.add(
                &format!("{side}_{finger}_tip"),
                Some(&parent),
                off,
                &[(HAND, 0.04), (FINGER_LEN, 0.04)],
            );
        }
    }
    b.add("chin", Some("jaw"), [0.0, -0.05, 0.04], &[(HEAD, 0.04)]);
    b.add("left_eye", Some("head"), [0.03, 0.05, 0.08], &[(HEAD, 0.04)]);
    b.add("right_eye", Some("head"), [-0.03, 0.05, 0.08], &[(HEAD, 0.04)]);

    let hand = |side: &str| HandAnatomy {
        wrist: b.idx(&format!("{side}_wrist")),
        palm_roots: ["index", "middle", "ring", "pinky"]
            .iter()
            .map(|f| b.idx(&format!("{side}_{f}1")))
            .collect(),
        fingers: FINGERS
            .iter()
            .map(|f| {
                (1..=3)
                    .map(|k| b.idx(&format!("{side}_{f}{k}")))
                    .chain(std::iter::once(b.idx(&format!("{side}_{f}_tip"))))
                    .collect()
            })
            .collect(),
        palm_normal: [0.0, -1.0, 0.0],
    };
    let hands = Hands {
        left: hand("left"),
        right: hand("right"),
    };

    let named = |names: &[&str]| names.iter().map(|n| b.idx(n)).collect::<Vec<_>>();
    let mut angle_limit = named(&["spine1", "spine2", "spine3", "neck", "upper_neck", "head"]);
    angle_limit.extend(hand_indices.left.iter().chain(&hand_indices.right));
    let subsets = Subsets {
        smooth_body: named(&["spine1", "spine2", "spine3", "left_foot", "right_foot"]),
        smooth_hand: Vec::new(),
        angle_limit,
        bend: vec![
            BendJoint {
                joint: b.idx("left_elbow"),
                axis: [0.0, 1.0, 0.0],
            },
            BendJoint {
                joint: b.idx("right_elbow"),
                axis: [0.0, -1.0, 0.0],
            },
            BendJoint {
                joint: b.idx("left_knee"),
                axis: [-1.0, 0.0, 0.0],
            },
            BendJoint {
                joint: b.idx("right_knee"),
                axis: [-1.0, 0.0, 0.0],
            },
        ],
    };

    let prior_rows = BODY_JOINTS.len() - 1 + hand_indices.left.len() * 2;
    let pose_prior = PosePrior {
        mean: IDENTITY_6D.repeat(prior_rows),
        precision: Precision::Diagonal(vec![1.0; prior_rows * 6]),
    };
    let jaw = b.idx("jaw");
    SkeletonModel::new(
        b.joints,
        SHAPE_DIM,
        EXPRESSION_DIM,
        BODY_JOINTS.len(),
        hand_indices,
        jaw,
        subsets,
        pose_prior,
        hands,
    )
    .expect("built-in skeleton is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_holistic_layout() {
        let m = default_skeleton();
        assert_eq!(m.joint_count(), 67);
        assert_eq!(m.body_joint_count, 23);
        assert_eq!(m.hand_joint_count(), 15);
        assert_eq!(m.row_count(), 54);
        for (i, name) in BODY_JOINTS.iter().enumerate() {
            assert_eq!(m.joints[i].name, *name);
        }
        assert!(m.height() > 1.5 && m.height() < 2.0, "{}", m.height());
    }

    #[test]
    fn roundtrips_through_json() {
        let m = default_skeleton();
        let text = serde_json::to_string(&m).unwrap();
        let back: SkeletonModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back.joints, m.joints);
        assert_eq!(back.subsets, m.subsets);
    }
}
