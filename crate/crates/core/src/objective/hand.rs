//! Hand geometry: anatomical finger frames, flexion/abduction angles and
//! palm measures.

use nalgebra::Vector3;

use crate::body_model::{FkFrame, HandAnatomy, MotionState, SkeletonModel};
use crate::dual::{cross3, dot3, norm3, Real, V3};
use crate::error::{Error, Result};

/// A finger joint together with the bone it drives and its rest frame:
/// x along the rest child bone, z toward the palm normal, y = z x x.
#[derive(Debug, Clone)]
pub(crate) struct FingerJoint {
    pub joint: usize,
    pub child: usize,
    pub axes: [[f64; 3]; 3],
}

pub(crate) fn finger_joints(model: &SkeletonModel, hand: &HandAnatomy) -> Result<Vec<FingerJoint>> {
    let normal = Vector3::from(hand.palm_normal);
    let mut out = Vec::new();
    for chain in &hand.fingers {
        for w in chain.windows(2) {
            let (joint, child) = (w[0], w[1]);
            let off = Vector3::from(model.joints[child].rest_offset);
            if off.norm() < 1e-12 {
                return Err(Error::DegenerateBone(model.joints[child].name.clone()));
            }
            let x = off.normalize();
            let zr = normal - x * normal.dot(&x);
            if zr.norm() < 1e-9 {
                return Err(Error::DegenerateBone(format!(
                    "{} is parallel to the palm normal",
                    model.joints[child].name
                )));
            }
            let z = zr.normalize();
            let y = z.cross(&x);
            out.push(FingerJoint {
                joint,
                child,
                axes: [x.into(), y.into(), z.into()],
            });
        }
    }
    Ok(out)
}

/// `(flexion, abduction)` of a bone direction given in the rest frame of
/// its joint. Abduction is measured out of the flexion plane so it stays
/// continuous past 90 degrees of flexion.
pub(crate) fn angles_from_direction<T: Real>(d: V3<T>, axes: &[[f64; 3]; 3]) -> [T; 2] {
    let ax = |k: usize| axes[k].map(T::cst);
    let dx = dot3(d, ax(0));
    let dy = dot3(d, ax(1));
    let dz = dot3(d, ax(2));
    let flex = dz.atan2(dx);
    let abd = dy.atan2((dx * dx + dz * dz).sqrt());
    [flex, abd]
}

/// Flexion and abduction angles (radians) of `finger_joint`.
pub fn flexion_abduction(
    model: &SkeletonModel,
    state: &MotionState,
    shape: &[f64],
    finger_joint: usize,
) -> Result<(f64, f64)> {
    let fj = [&model.hands.left, &model.hands.right]
        .into_iter()
        .map(|h| finger_joints(model, h))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .find(|f| f.joint == finger_joint)
        .ok_or_else(|| Error::ModelMismatch(format!("joint {finger_joint} is not a finger joint")))?;
    let fk = FkFrame::compute(model, state, shape, false)?;
    let d = fk.local[fj.joint] * fk.offsets[fj.child];
    if d.norm() < 1e-12 {
        return Err(Error::DegenerateBone(model.joints[fj.child].name.clone()));
    }
    let [f, a] = angles_from_direction::<f64>(d.into(), &fj.axes);
    Ok((f, a))
}

/// Palm curvature between consecutive root bones and angular distance of
/// each root bone to the palm plane. The plane normal is the Newell normal
/// of the wrist + root-joint polygon.
pub(crate) fn palm_measures<T: Real>(wrist: V3<T>, roots: &[V3<T>]) -> (Vec<T>, Vec<T>) {
    let bones: Vec<V3<T>> = roots
        .iter()
        .map(|r| [r[0] - wrist[0], r[1] - wrist[1], r[2] - wrist[2]])
        .collect();
    // With the wrist at the origin the closed-loop Newell sum reduces to
    // consecutive cross products of the bones.
    let mut n = [T::cst(0.0); 3];
    for w in bones.windows(2) {
        let c = cross3(w[0], w[1]);
        n = [n[0] + c[0], n[1] + c[1], n[2] + c[2]];
    }
    let nn = norm3(n);
    let n = n.map(|x| x / nn);
    let curvature = bones
        .windows(2)
        .map(|w| dot3(cross3(w[0], w[1]), n).atan2(dot3(w[0], w[1])))
        .collect();
    let distance = bones
        .iter()
        .map(|b| {
            let s = dot3(*b, n) / norm3(*b);
            s.asin()
        })
        .collect();
    (curvature, distance)
}

pub(crate) fn v3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}
