//! Seeded synthetic clips: smooth, biomechanically valid motion together
//! with its exact and noisy 2D keypoints.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::body_model::{
    axis_angle_to_matrix, matrix_to_rot6d, project_frame, rot6d_to_matrix, CameraIntrinsics, FkFrame, MotionSequence,
    MotionState, SkeletonModel,
};
use crate::error::{Error, Result};
use crate::keypoints::{Group, GroupLayout, Keypoint, KeypointFrame, KeypointSequence};
use crate::objective::finger_joints;

/// Root rotation that turns the y-up, +z-facing skeleton toward a camera
/// looking down +z with image v pointing down.
pub const CAMERA_FACING: [f64; 6] = [1.0, 0.0, 0.0, 0.0, -1.0, 0.0];

/// 1280x720 pinhole camera with a 1000 px focal length.
pub fn default_camera() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 1000.0,
        fy: 1000.0,
        cx: 640.0,
        cy: 360.0,
        width: Some(1280.0),
        height: Some(720.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub frames: usize,
    pub fps: f64,
    /// Standard deviation of the pixel noise of the noisy keypoints.
    pub noise_px: f64,
    /// Shape coefficients are drawn uniformly from `[-shape_scale, shape_scale]`.
    pub shape_scale: f64,
    /// Distance of the pelvis from the camera in meters.
    pub depth: f64,
    /// Per-axis rotation error (radians) of the coarse initialization.
    pub init_noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            frames: 30,
            fps: 30.0,
            noise_px: 2.0,
            shape_scale: 0.3,
            depth: 3.0,
            init_noise: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthClip {
    pub motion: MotionSequence,
    pub camera: CameraIntrinsics,
    pub clean: KeypointSequence,
    pub noisy: KeypointSequence,
    /// Coarse per-frame estimate standing in for a 3D regressor.
    pub init: MotionSequence,
}

/// Low-frequency signal: `center + sum of two sinusoids` with random
/// frequencies in 0.2..1 Hz and phases.
struct Wave {
    center: f64,
    parts: [(f64, f64, f64); 2],
}

impl Wave {
    fn new(rng: &mut ChaCha8Rng, center: f64, amplitude: f64) -> Self {
        let mut part = || {
            (
                amplitude * 0.5 * rng.random_range(0.5..1.0),
                rng.random_range(0.2..1.0),
                rng.random_range(0.0..TAU),
            )
        };
        Wave {
            center,
            parts: [part(), part()],
        }
    }

    fn at(&self, seconds: f64) -> f64 {
        self.center
            + self
                .parts
                .iter()
                .map(|(a, f, p)| a * (TAU * f * seconds + p).sin())
                .sum::<f64>()
    }
}

struct AxisWave([Wave; 3]);

impl AxisWave {
    fn new(rng: &mut ChaCha8Rng, amplitude: [f64; 3]) -> Self {
        AxisWave(amplitude.map(|a| Wave::new(rng, 0.0, a)))
    }

    fn at(&self, s: f64) -> [f64; 3] {
        [self.0[0].at(s), self.0[1].at(s), self.0[2].at(s)]
    }
}

/// Rotation taking unit `a` onto unit `b` about `a x b`.
fn swing(a: Vector3<f64>, b: Vector3<f64>) -> Matrix3<f64> {
    let axis = a.cross(&b);
    let s = axis.norm();
    if s < 1e-12 {
        return Matrix3::identity();
    }
    let angle = s.atan2(a.dot(&b));
    axis_angle_to_matrix((axis / s * angle).into())
}

/// Smooth motion whose hands stay inside the default biomechanical limits:
/// finger joints flex in `[0.1, 1.0]` rad with at most 0.15 rad abduction,
/// elbows and knees only bend naturally and other joints move by at most
/// about 0.3 rad.
pub fn synth_motion(model: &SkeletonModel, opts: &SynthOptions, rng: &mut ChaCha8Rng) -> Result<MotionSequence> {
    if opts.frames == 0 {
        return Err(Error::EmptySequence);
    }
    if !(opts.fps > 0.0) {
        return Err(Error::Config(format!("fps must be positive, got {}", opts.fps)));
    }
    let shape: Vec<f64> = (0..model.shape_dim)
        .map(|_| rng.random_range(-1.0..=1.0) * opts.shape_scale)
        .collect();

    enum Driver {
        Free(AxisWave),
        Hinge(Vector3<f64>, Wave),
        Finger([[f64; 3]; 3], Wave, Wave),
    }
    let mut drivers: Vec<Option<Driver>> = (0..model.joint_count()).map(|_| None).collect();
    for j in 0..model.body_joint_count {
        drivers[j] = Some(Driver::Free(AxisWave::new(rng, [0.3, 0.3, 0.3])));
    }
    for b in &model.subsets.bend {
        let child = model.children(b.joint).next();
        let e = child.map_or(Vector3::x(), |c| Vector3::from(model.joints[c].rest_offset).normalize());
        let h = Vector3::from(b.axis);
        let h = (h - e * h.dot(&e)).normalize();
        let amp = rng.random_range(0.2..0.5);
        drivers[b.joint] = Some(Driver::Hinge(h, Wave::new(rng, -0.7, amp)));
    }
    for hand in [&model.hands.left, &model.hands.right] {
        for f in finger_joints(model, hand)? {
            drivers[f.joint] = Some(Driver::Finger(
                f.axes,
                Wave::new(rng, 0.55, 0.8),
                Wave::new(rng, 0.0, 0.25),
            ));
        }
    }
    drivers[model.jaw_joint_index] = Some(Driver::Hinge(Vector3::x(), Wave::new(rng, 0.1, 0.15)));
    let root_yaw = Wave::new(rng, 0.0, 0.3);
    let root_tilt = AxisWave::new(rng, [0.1, 0.0, 0.1]);
    let drift = AxisWave::new(rng, [0.1, 0.05, 0.1]);
    let facing = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
    let root_offset = Vector3::from(model.joints[0].rest_offset);

    let mut frames = Vec::with_capacity(opts.frames);
    for t in 0..opts.frames {
        let s = t as f64 / opts.fps;
        let mut state = MotionState::rest(model);
        for j in 0..model.joint_count() {
            let Some(row) = model.slot(j) else { continue };
            let rot = match &drivers[j] {
                _ if j == 0 => {
                    let tilt = root_tilt.at(s);
                    facing * axis_angle_to_matrix([tilt[0], root_yaw.at(s), tilt[2]])
                }
                Some(Driver::Free(w)) => axis_angle_to_matrix(w.at(s)),
                Some(Driver::Hinge(h, w)) => axis_angle_to_matrix((h * w.at(s)).into()),
                Some(Driver::Finger(axes, flex, abd)) => {
                    let (f, a) = (flex.at(s).clamp(0.1, 1.0), abd.at(s).clamp(-0.15, 0.15));
                    let [x, y, z] = axes.map(Vector3::from);
                    let d = x * (a.cos() * f.cos()) + y * a.sin() + z * (a.cos() * f.sin());
                    swing(x, d)
                }
                None => Matrix3::identity(),
            };
            *state.row_mut(row) = matrix_to_rot6d(&rot);
        }
        let pelvis = Vector3::new(0.0, 0.05, opts.depth) + Vector3::from(drift.at(s));
        state.transl = (pelvis - root_offset).into();
        frames.push(state);
    }
    Ok(MotionSequence {
        fps: opts.fps,
        shape,
        frames,
    })
}

/// Projects every mapped joint of `layout` with confidence 1.
pub fn render_keypoints(
    model: &SkeletonModel,
    cam: &CameraIntrinsics,
    motion: &MotionSequence,
    layout: &GroupLayout,
) -> Result<KeypointSequence> {
    let resolved = layout.resolve(model)?;
    let mut frames = Vec::with_capacity(motion.len());
    for (t, state) in motion.frames.iter().enumerate() {
        let fk = FkFrame::compute(model, state, &motion.shape, false)?;
        let uv = project_frame(&fk.positions, cam, t)?;
        let mut frame = KeypointFrame {
            frame_index: t as i64,
            body: Vec::new(),
            left_hand: Vec::new(),
            right_hand: Vec::new(),
            face: Vec::new(),
        };
        for g in Group::ALL {
            *frame.group_mut(g) = resolved
                .group(g)
                .iter()
                .map(|j| match j {
                    Some(j) => Keypoint {
                        u: uv[*j][0],
                        v: uv[*j][1],
                        conf: 1.0,
                    },
                    None => Keypoint {
                        u: 0.0,
                        v: 0.0,
                        conf: 0.0,
                    },
                })
                .collect();
        }
        frames.push(frame);
    }
    Ok(KeypointSequence {
        source_name: "synthetic".into(),
        frames,
        layout: layout.clone(),
    })
}

/// Adds isotropic Gaussian pixel noise to every keypoint.
pub fn add_noise(seq: &KeypointSequence, sigma: f64, rng: &mut ChaCha8Rng) -> Result<KeypointSequence> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("noise sigma {sigma}: {e}")))?;
    let mut out = seq.clone();
    for f in &mut out.frames {
        for g in Group::ALL {
            for k in f.group_mut(g) {
                k.u += normal.sample(rng);
                k.v += normal.sample(rng);
            }
        }
    }
    Ok(out)
}

/// Motion, camera and keypoints from one seed.
pub fn synth_clip(model: &SkeletonModel, opts: &SynthOptions, seed: u64) -> Result<SynthClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let motion = synth_motion(model, opts, &mut rng)?;
    let camera = default_camera();
    let clean = render_keypoints(model, &camera, &motion, &GroupLayout::holistic())?;
    let noisy = add_noise(&clean, opts.noise_px, &mut rng)?;
    let init = coarse_init(&motion, opts.init_noise, &mut rng)?;
    Ok(SynthClip {
        motion,
        camera,
        clean,
        noisy,
        init,
    })
}

/// Degrades `motion` the way a per-frame regressor estimate would: every
/// rotation row of every frame is composed with an independent random
/// rotation of up to `sigma` radians per axis, the shape is reset to the
/// mean and the subject is pushed 10 cm deeper.
pub fn coarse_init(motion: &MotionSequence, sigma: f64, rng: &mut ChaCha8Rng) -> Result<MotionSequence> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("init noise must be nonnegative, got {sigma}")));
    }
    let mut out = motion.clone();
    out.shape.iter_mut().for_each(|b| *b = 0.0);
    for state in &mut out.frames {
        for r in 0..state.row_count() {
            let offset = [0, 1, 2].map(|_| {
                if sigma > 0.0 {
                    rng.random_range(-sigma..=sigma)
                } else {
                    0.0
                }
            });
            let m = rot6d_to_matrix(state.row(r))? * axis_angle_to_matrix(offset);
            *state.row_mut(r) = matrix_to_rot6d(&m);
        }
        state.transl[2] += 0.1;
    }
    Ok(out)
}

/// A random configuration for derivative checks: rotation rows that are
/// perturbed (not orthonormal) 6D vectors, random shape and a root about
/// `depth` meters in front of the camera.
pub fn random_state(model: &SkeletonModel, rng: &mut ChaCha8Rng, depth: f64) -> MotionState {
    let mut state = MotionState::rest(model);
    for r in 0..state.row_count() {
        let aa = [0, 1, 2].map(|_| rng.random_range(-0.8..0.8));
        let mut m = if r == 0 {
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)) * axis_angle_to_matrix(aa.map(|x| x * 0.3))
        } else {
            axis_angle_to_matrix(aa)
        };
        m *= rng.random_range(0.7..1.3);
        let mut row = matrix_to_rot6d(&m);
        for v in &mut row {
            *v += rng.random_range(-0.1..0.1);
        }
        *state.row_mut(r) = row;
    }
    state.transl = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), depth];
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{default_skeleton, geodesic_angle, rot6d_to_matrix};

    #[test]
    fn seeded_clip_is_reproducible() {
        let model = default_skeleton();
        let a = synth_clip(&model, &SynthOptions::default(), 1).unwrap();
        let b = synth_clip(&model, &SynthOptions::default(), 1).unwrap();
        assert_eq!(a.motion, b.motion);
        assert_eq!(a.noisy, b.noisy);
        let c = synth_clip(&model, &SynthOptions::default(), 2).unwrap();
        assert_ne!(a.motion, c.motion);
    }

    #[test]
    fn rows_are_rotations_and_subject_is_in_view() {
        let model = default_skeleton();
        let clip = synth_clip(&model, &SynthOptions::default(), 7).unwrap();
        for f in &clip.motion.frames {
            for r in 0..f.row_count() {
                let m = rot6d_to_matrix(f.row(r)).unwrap();
                assert!((m.transpose() * m - Matrix3::identity()).norm() < 1e-12);
                if r > 0 {
                    assert!(geodesic_angle(&m) < 1.3);
                }
            }
        }
        for f in &clip.clean.frames {
            for g in Group::ALL {
                for k in f.group(g) {
                    assert!((0.0..1280.0).contains(&k.u) && (0.0..720.0).contains(&k.v), "{k:?}");
                }
            }
        }
    }
}
