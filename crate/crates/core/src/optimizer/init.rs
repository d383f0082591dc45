use nalgebra::Vector3;

use crate::body_model::{CameraIntrinsics, FkFrame, MotionSequence, MotionState, SkeletonModel};
use crate::error::{Error, Result};
use crate::keypoints::KeypointSequence;
use crate::synth::CAMERA_FACING;

/// Pelvis depth used when a frame has too few detections to place it.
pub const DEFAULT_DEPTH: f64 = 2.0;

/// Starting motion for a fit. An initialization sequence is used as is;
/// otherwise every frame starts from the rest pose facing the camera, with
/// depth and offset chosen so the spread and centroid of the projected rest
/// joints match the detections of that frame.
pub fn initialize(
    model: &SkeletonModel,
    cam: &CameraIntrinsics,
    keypoints: &KeypointSequence,
    init: Option<&MotionSequence>,
    fps: f64,
) -> Result<MotionSequence> {
    if let Some(init) = init {
        if init.len() != keypoints.len() {
            return Err(Error::InitMismatch(format!(
                "initialization has {} frames, keypoints have {}",
                init.len(),
                keypoints.len()
            )));
        }
        init.check(model).map_err(|e| Error::InitMismatch(e.to_string()))?;
        return Ok(init.clone());
    }
    let frames = keypoints.len().max(1);
    let mut seq = MotionSequence::rest(model, frames, fps);
    let mut rest = MotionState::rest(model);
    rest.theta_b[0] = CAMERA_FACING;
    let fk = FkFrame::compute(model, &rest, &seq.shape, false)?;
    let resolved = keypoints.layout.resolve(model)?;
    let root = fk.positions[0];

    let placements: Vec<Option<[f64; 3]>> = keypoints
        .frames
        .iter()
        .map(|f| {
            let pairs: Vec<(Vector3<f64>, [f64; 2])> = resolved
                .mapped()
                .filter_map(|(g, s, j)| {
                    let k = f.group(g).get(s)?;
                    (k.conf > 0.0).then(|| (fk.positions[j], [k.u, k.v]))
                })
                .collect();
            place(cam, &pairs)
        })
        .collect();
    let fallback = [-root.x, -root.y, DEFAULT_DEPTH - root.z];
    for (t, state) in seq.frames.iter_mut().enumerate() {
        state.theta_b[0] = CAMERA_FACING;
        state.transl = nearest_placement(&placements, t).unwrap_or(fallback);
    }
    Ok(seq)
}

/// Closed-form translation of a rigid point set so that its perspective
/// image matches `pairs` in centroid and spread.
fn place(cam: &CameraIntrinsics, pairs: &[(Vector3<f64>, [f64; 2])]) -> Option<[f64; 3]> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mean3 = pairs.iter().fold(Vector3::zeros(), |a, (p, _)| a + p) / n;
    let mean2 = pairs
        .iter()
        .fold([0.0, 0.0], |a, (_, q)| [a[0] + q[0] / n, a[1] + q[1] / n]);
    let spread3 = (pairs
        .iter()
        .map(|(p, _)| (p.xy() - mean3.xy()).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt();
    let spread2 = (pairs
        .iter()
        .map(|(_, q)| (q[0] - mean2[0]).powi(2) + (q[1] - mean2[1]).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(spread2 > 1e-9 && spread3 > 1e-9) {
        return None;
    }
    let focal = 0.5 * (cam.fx + cam.fy);
    let depth = focal * spread3 / spread2;
    let tx = (mean2[0] - cam.cx) * depth / cam.fx - mean3.x;
    let ty = (mean2[1] - cam.cy) * depth / cam.fy - mean3.y;
    Some([tx, ty, depth - mean3.z])
}

fn nearest_placement(placements: &[Option<[f64; 3]>], t: usize) -> Option<[f64; 3]> {
    (0..placements.len())
        .flat_map(|k| [t.checked_sub(k), Some(t + k)])
        .flatten()
        .find_map(|i| placements.get(i).copied().flatten())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{default_skeleton, project};
    use crate::keypoints::GroupLayout;
    use crate::synth::{synth_clip, SynthOptions};

    #[test]
    fn init_file_is_used_verbatim() {
        let model = default_skeleton();
        let clip = synth_clip(
            &model,
            &SynthOptions {
                frames: 4,
                ..Default::default()
            },
            3,
        )
        .unwrap();
        let out = initialize(&model, &clip.camera, &clip.clean, Some(&clip.motion), 30.0).unwrap();
        assert_eq!(out, clip.motion);
        let short = MotionSequence::rest(&model, 2, 30.0);
        assert!(matches!(
            initialize(&model, &clip.camera, &clip.clean, Some(&short), 30.0),
            Err(Error::InitMismatch(_))
        ));
    }

    #[test]
    fn centered_subject_lands_close() {
        let model = default_skeleton();
        let clip = synth_clip(
            &model,
            &SynthOptions {
                frames: 5,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        let init = initialize(&model, &clip.camera, &clip.clean, None, 30.0).unwrap();
        let diag = clip.camera.diagonal();
        for (state, kp) in init.frames.iter().zip(&clip.clean.frames) {
            let fk = FkFrame::compute(&model, state, &init.shape, false).unwrap();
            let uv = project(&fk.positions, &clip.camera).unwrap();
            let body = &kp.body;
            let err: f64 = body
                .iter()
                .zip(&uv)
                .map(|(k, p)| (k.u - p[0]).hypot(k.v - p[1]))
                .sum::<f64>()
                / body.len() as f64;
            assert!(err < 0.1 * diag, "mean error {err}");
            assert!(
                (fk.positions[0].z - 3.0).abs() < 0.5,
                "pelvis depth {}",
                fk.positions[0].z
            );
        }
    }

    #[test]
    fn empty_keypoints_fall_back_to_default_depth() {
        let model = default_skeleton();
        let kp = KeypointSequence {
            source_name: "empty".into(),
            frames: Vec::new(),
            layout: GroupLayout::holistic(),
        };
        let cam = crate::synth::default_camera();
        let init = initialize(&model, &cam, &kp, None, 30.0).unwrap();
        assert_eq!(init.len(), 1);
        let fk = FkFrame::compute(&model, &init.frames[0], &init.shape, false).unwrap();
        assert!((fk.positions[0] - Vector3::new(0.0, 0.0, DEFAULT_DEPTH)).norm() < 1e-12);
    }
}
