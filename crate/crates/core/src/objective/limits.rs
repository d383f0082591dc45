use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hand::{finger_joints, palm_measures, v3, FingerJoint};
use super::hull::{check_hull, Point2};
use super::interval::Interval;
use crate::body_model::{FkFrame, HandAnatomy, MotionState, SkeletonModel};
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointInterval {
    pub joint: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInterval {
    pub joints: [String; 2],
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointHull {
    pub joint: String,
    /// Counterclockwise `(flexion, abduction)` vertices, radians.
    pub hull: Vec<Point2>,
}

/// Biomechanical limits keyed by joint name. Bone entries name the joint at
/// the distal end of the bone; lengths in meters, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiomechanicalLimits {
    pub bones: Vec<JointInterval>,
    pub curvature: Vec<PairInterval>,
    pub angular_distance: Vec<JointInterval>,
    pub angle_hulls: Vec<JointHull>,
    pub pose_angles: Vec<JointInterval>,
}

impl BiomechanicalLimits {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        io::read_json(path.as_ref())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_json(path.as_ref(), self)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct HandLimits {
    pub wrist: usize,
    pub roots: Vec<usize>,
    /// `(joint, interval)` for every bone ending at `joint`.
    pub bones: Vec<(usize, Interval)>,
    pub curvature: Vec<Interval>,
    pub angular_distance: Vec<Interval>,
    pub fingers: Vec<(FingerJoint, Vec<Point2>)>,
}

/// Limits resolved to joint indices for one skeleton.
#[derive(Debug, Clone)]
pub struct ResolvedLimits {
    pub(crate) hands: [HandLimits; 2],
    pub(crate) pose_angles: Vec<(usize, Interval)>,
}

fn hand_bones(hand: &HandAnatomy) -> Vec<usize> {
    hand.fingers.iter().flatten().copied().collect()
}

impl ResolvedLimits {
    pub fn resolve(model: &SkeletonModel, limits: &BiomechanicalLimits) -> Result<Self> {
        let name = |j: usize| model.joints[j].name.clone();
        let single = |entries: &[JointInterval]| -> Result<HashMap<String, Interval>> {
            entries
                .iter()
                .map(|e| Ok((e.joint.clone(), Interval::new(e.min, e.max)?)))
                .collect()
        };
        let bones = single(&limits.bones)?;
        let angdist = single(&limits.angular_distance)?;
        let pose = single(&limits.pose_angles)?;
        let curvature: HashMap<(String, String), Interval> = limits
            .curvature
            .iter()
            .map(|e| Ok(((e.joints[0].clone(), e.joints[1].clone()), Interval::new(e.min, e.max)?)))
            .collect::<Result<_>>()?;
        let mut hulls = HashMap::new();
        for h in &limits.angle_hulls {
            check_hull(&h.hull).map_err(|e| Error::InvalidLimits(format!("hull of {}: {e}", h.joint)))?;
            hulls.insert(h.joint.clone(), h.hull.clone());
        }
        let missing = |what: &str, n: String| Error::LimitsIncomplete(format!("{what} {n}"));

        let resolve_hand = |hand: &HandAnatomy| -> Result<HandLimits> {
            let bones = hand_bones(hand)
                .into_iter()
                .map(|j| {
                    bones
                        .get(&name(j))
                        .map(|iv| (j, *iv))
                        .ok_or_else(|| missing("bone", name(j)))
                })
                .collect::<Result<_>>()?;
            let curvature = hand
                .palm_roots
                .windows(2)
                .map(|w| {
                    curvature
                        .get(&(name(w[0]), name(w[1])))
                        .copied()
                        .ok_or_else(|| missing("palm curvature", format!("{}-{}", name(w[0]), name(w[1]))))
                })
                .collect::<Result<_>>()?;
            let angular_distance = hand
                .palm_roots
                .iter()
                .map(|&r| {
                    angdist
                        .get(&name(r))
                        .copied()
                        .ok_or_else(|| missing("palm angular distance", name(r)))
                })
                .collect::<Result<_>>()?;
            let fingers = finger_joints(model, hand)?
                .into_iter()
                .map(|f| {
                    let h = hulls
                        .get(&name(f.joint))
                        .cloned()
                        .ok_or_else(|| missing("angle hull", name(f.joint)))?;
                    Ok((f, h))
                })
                .collect::<Result<_>>()?;
            Ok(HandLimits {
                wrist: hand.wrist,
                roots: hand.palm_roots.clone(),
                bones,
                curvature,
                angular_distance,
                fingers,
            })
        };
        let hands = [resolve_hand(&model.hands.left)?, resolve_hand(&model.hands.right)?];
        let pose_angles = model
            .subsets
            .angle_limit
            .iter()
            .map(|&j| {
                pose.get(&name(j))
                    .map(|iv| (j, *iv))
                    .ok_or_else(|| missing("pose angle", name(j)))
            })
            .collect::<Result<_>>()?;
        Ok(ResolvedLimits { hands, pose_angles })
    }
}

/// Limits centered on the rest hand: bone lengths +-20 %, palm curvature
/// and angular distance +-0.35 rad, rectangular flexion/abduction hulls
/// (wider for the thumb) and generous rotation-angle bounds.
pub fn default_limits(model: &SkeletonModel) -> BiomechanicalLimits {
    let zero = vec![0.0; model.shape_dim];
    let rest = FkFrame::compute(model, &MotionState::rest(model), &zero, false).expect("rest pose is valid");
    let name = |j: usize| model.joints[j].name.clone();
    let mut out = BiomechanicalLimits {
        bones: Vec::new(),
        curvature: Vec::new(),
        angular_distance: Vec::new(),
        angle_hulls: Vec::new(),
        pose_angles: Vec::new(),
    };
    for hand in [&model.hands.left, &model.hands.right] {
        for j in hand_bones(hand) {
            let len = rest.offsets[j].norm();
            out.bones.push(JointInterval {
                joint: name(j),
                min: 0.8 * len,
                max: 1.2 * len,
            });
        }
        let roots: Vec<[f64; 3]> = hand.palm_roots.iter().map(|&r| v3(&rest.positions[r])).collect();
        let (curv, dist) = palm_measures::<f64>(v3(&rest.positions[hand.wrist]), &roots);
        for (w, c) in hand.palm_roots.windows(2).zip(curv) {
            let iv = Interval::around(c, 0.35);
            out.curvature.push(PairInterval {
                joints: [name(w[0]), name(w[1])],
                min: iv.min,
                max: iv.max,
            });
        }
        for (&r, d) in hand.palm_roots.iter().zip(dist) {
            let iv = Interval::around(d, 0.35);
            out.angular_distance.push(JointInterval {
                joint: name(r),
                min: iv.min,
                max: iv.max,
            });
        }
        for f in finger_joints(model, hand).expect("built-in hands are valid") {
            let thumb = model.joints[f.joint].name.contains("thumb");
            let (flex, abd) = if thumb { ((-0.6, 1.6), 0.8) } else { ((-0.3, 1.6), 0.35) };
            out.angle_hulls.push(JointHull {
                joint: name(f.joint),
                hull: vec![[flex.0, -abd], [flex.1, -abd], [flex.1, abd], [flex.0, abd]],
            });
        }
    }
    for &j in &model.subsets.angle_limit {
        let hand = model.hand_joint_indices.left.contains(&j) || model.hand_joint_indices.right.contains(&j);
        out.pose_angles.push(JointInterval {
            joint: name(j),
            min: 0.0,
            max: if hand { 1.8 } else { 0.9 },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::default_skeleton;

    #[test]
    fn default_limits_resolve() {
        let m = default_skeleton();
        let l = default_limits(&m);
        let r = ResolvedLimits::resolve(&m, &l).unwrap();
        assert_eq!(r.hands[0].bones.len(), 20);
        assert_eq!(r.hands[0].curvature.len(), 3);
        assert_eq!(r.hands[0].angular_distance.len(), 4);
        assert_eq!(r.hands[0].fingers.len(), 15);
        assert_eq!(r.pose_angles.len(), m.subsets.angle_limit.len());
    }

    #[test]
    fn missing_entry_is_named() {
        let m = default_skeleton();
        let mut l = default_limits(&m);
        l.bones.retain(|b| b.joint != "right_ring2");
        match ResolvedLimits::resolve(&m, &l) {
            Err(Error::LimitsIncomplete(msg)) => assert!(msg.contains("right_ring2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverted_interval_rejected() {
        let m = default_skeleton();
        let mut l = default_limits(&m);
        l.bones[0].min = 1.0;
        l.bones[0].max = 0.0;
        assert!(matches!(
            ResolvedLimits::resolve(&m, &l),
            Err(Error::InvalidInterval { .. })
        ));
    }
}
