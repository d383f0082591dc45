//! Biomechanical checks of a motion and fit-quality measures.

use serde::{Deserialize, Serialize};

use crate::body_model::{project_frame, CameraIntrinsics, FkFrame, MotionSequence, SkeletonModel};
use crate::error::{Error, Result};
use crate::keypoints::KeypointSequence;
use crate::objective::{angles_from_direction, hull_contains, palm_measures, v3, BiomechanicalLimits, ResolvedLimits};

/// Slack for interval and hull membership.
const TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    BoneLength,
    PalmCurvature,
    PalmAngularDistance,
    JointAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub frame: usize,
    pub kind: CheckKind,
    /// Joint (or joint pair) the check belongs to.
    pub name: String,
    /// Measured value; `(flexion, abduction)` for joint angles.
    pub value: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub total: usize,
    pub violations: usize,
    pub violation_rate: f64,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo - TOLERANCE && x <= hi + TOLERANCE
}

/// Checks every frame against bone-length intervals, palm intervals and
/// flexion/abduction hulls.
pub fn validate_motion(
    model: &SkeletonModel,
    motion: &MotionSequence,
    limits: &BiomechanicalLimits,
) -> Result<ValidationReport> {
    motion.check(model)?;
    let resolved = ResolvedLimits::resolve(model, limits)?;
    let name = |j: usize| model.joints[j].name.clone();
    let mut checks = Vec::new();
    for (t, state) in motion.frames.iter().enumerate() {
        let fk = FkFrame::compute(model, state, &motion.shape, false)?;
        for hand in &resolved.hands {
            for (j, iv) in &hand.bones {
                let len = fk.offsets[*j].norm();
                checks.push(Check {
                    frame: t,
                    kind: CheckKind::BoneLength,
                    name: name(*j),
                    value: vec![len],
                    pass: within(len, iv.min, iv.max),
                });
            }
            let roots: Vec<[f64; 3]> = hand.roots.iter().map(|&r| v3(&fk.positions[r])).collect();
            let (curv, dist) = palm_measures::<f64>(v3(&fk.positions[hand.wrist]), &roots);
            for ((w, c), iv) in hand.roots.windows(2).zip(curv).zip(&hand.curvature) {
                checks.push(Check {
                    frame: t,
                    kind: CheckKind::PalmCurvature,
                    name: format!("{}-{}", name(w[0]), name(w[1])),
                    value: vec![c],
                    pass: within(c, iv.min, iv.max),
                });
            }
            for ((&r, d), iv) in hand.roots.iter().zip(dist).zip(&hand.angular_distance) {
                checks.push(Check {
                    frame: t,
                    kind: CheckKind::PalmAngularDistance,
                    name: name(r),
                    value: vec![d],
                    pass: within(d, iv.min, iv.max),
                });
            }
            for (f, hull) in &hand.fingers {
                let d = fk.local[f.joint] * fk.offsets[f.child];
                if d.norm() < 1e-12 {
                    return Err(Error::DegenerateBone(name(f.child)));
                }
                let [af, aa] = angles_from_direction::<f64>(v3(&d), &f.axes);
                let inside =
                    hull_contains(hull, [af, aa]) || crate::objective::hull_distance([af, aa], hull) <= TOLERANCE;
                checks.push(Check {
                    frame: t,
                    kind: CheckKind::JointAngle,
                    name: name(f.joint),
                    value: vec![af, aa],
                    pass: inside,
                });
            }
        }
    }
    let total = checks.len();
    let violations = checks.iter().filter(|c| !c.pass).count();
    Ok(ValidationReport {
        checks,
        total,
        violations,
        violation_rate: if total == 0 {
            0.0
        } else {
            violations as f64 / total as f64
        },
    })
}

/// Mean pixel distance between projected joints and keypoints with
/// positive confidence.
pub fn mean_reprojection_error(
    model: &SkeletonModel,
    cam: &CameraIntrinsics,
    motion: &MotionSequence,
    keypoints: &KeypointSequence,
) -> Result<f64> {
    if motion.len() != keypoints.len() {
        return Err(Error::Layout(format!(
            "motion has {} frames, keypoints have {}",
            motion.len(),
            keypoints.len()
        )));
    }
    let resolved = keypoints.layout.resolve(model)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (t, (state, kf)) in motion.frames.iter().zip(&keypoints.frames).enumerate() {
        let fk = FkFrame::compute(model, state, &motion.shape, false)?;
        let uv = project_frame(&fk.positions, cam, t)?;
        for (g, s, j) in resolved.mapped() {
            if let Some(k) = kf.group(g).get(s).filter(|k| k.conf > 0.0) {
                sum += (uv[j][0] - k.u).hypot(uv[j][1] - k.v);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(sum / count as f64)
}

/// Mean Euclidean distance over all joints and frames after translating
/// both skeletons so their roots coincide.
pub fn mean_joint_error(model: &SkeletonModel, a: &MotionSequence, b: &MotionSequence) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ModelMismatch(format!(
            "sequences have {} and {} frames",
            a.len(),
            b.len()
        )));
    }
    let mut sum = 0.0;
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        let pa = FkFrame::compute(model, fa, &a.shape, false)?.positions;
        let pb = FkFrame::compute(model, fb, &b.shape, false)?.positions;
        sum += pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| ((x - pa[0]) - (y - pb[0])).norm())
            .sum::<f64>()
            / pa.len() as f64;
    }
    Ok(sum / a.len() as f64)
}

/// Mean absolute frame-to-frame change of the body and hand rotation rows.
pub fn mean_pose_velocity(model: &SkeletonModel, motion: &MotionSequence) -> f64 {
    let rows = model.body_joint_count + 2 * model.hand_joint_count();
    let pairs = motion.frames.windows(2);
    let n = pairs.len();
    if n == 0 {
        return 0.0;
    }
    pairs
        .map(|w| {
            (0..rows)
                .map(|r| {
                    let (p, q) = (w[0].row(r), w[1].row(r));
                    (0..6).map(|k| (q[k] - p[k]).powi(2)).sum::<f64>().sqrt()
                })
                .sum::<f64>()
                / rows as f64
        })
        .sum::<f64>()
        / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::default_skeleton;
    use crate::objective::default_limits;

    #[test]
    fn rest_pose_has_no_violations() {
        let model = default_skeleton();
        let r = validate_motion(&model, &MotionSequence::rest(&model, 3, 30.0), &default_limits(&model)).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.total, 3 * 2 * (20 + 3 + 4 + 15));
    }

    #[test]
    fn stretched_bone_is_flagged() {
        let model = default_skeleton();
        let mut limits = default_limits(&model);
        let entry = limits.bones.iter_mut().find(|b| b.joint == "left_middle2").unwrap();
        entry.max = entry.min;
        entry.min *= 0.9;
        let r = validate_motion(&model, &MotionSequence::rest(&model, 2, 30.0), &limits).unwrap();
        let failed: Vec<_> = r.failures().map(|c| (c.frame, c.name.as_str())).collect();
        assert_eq!(failed, vec![(0, "left_middle2"), (1, "left_middle2")]);
    }
}
