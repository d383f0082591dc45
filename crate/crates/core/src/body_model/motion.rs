use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rotation::IDENTITY_6D;
use super::skeleton::SkeletonModel;
use crate::error::{Error, Result};
use crate::io;

/// One frame of holistic motion. Poses are 6D rotation rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    /// Body rows, row 0 is the global orientation.
    pub theta_b: Vec<[f64; 6]>,
    /// Left hand rows followed by right hand rows.
    pub theta_h: Vec<[f64; 6]>,
    pub theta_f: [f64; 6],
    /// Carried through I/O; does not enter the fitting energy.
    pub expr: Vec<f64>,
    /// Root translation, meters.
    #[serde(default)]
    pub transl: [f64; 3],
}

impl MotionState {
    pub fn rest(model: &SkeletonModel) -> Self {
        MotionState {
            theta_b: vec![IDENTITY_6D; model.body_joint_count],
            theta_h: vec![IDENTITY_6D; 2 * model.hand_joint_count()],
            theta_f: IDENTITY_6D,
            expr: vec![0.0; model.expression_dim],
            transl: [0.0; 3],
        }
    }

    /// Rotation row `r` in body, hand, jaw order.
    pub fn row(&self, r: usize) -> &[f64; 6] {
        let nb = self.theta_b.len();
        let nh = self.theta_h.len();
        if r < nb {
            &self.theta_b[r]
        } else if r < nb + nh {
            &self.theta_h[r - nb]
        } else {
            &self.theta_f
        }
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64; 6] {
        let nb = self.theta_b.len();
        let nh = self.theta_h.len();
        if r < nb {
            &mut self.theta_b[r]
        } else if r < nb + nh {
            &mut self.theta_h[r - nb]
        } else {
            &mut self.theta_f
        }
    }

    pub fn row_count(&self) -> usize {
        self.theta_b.len() + self.theta_h.len() + 1
    }

    pub fn check(&self, model: &SkeletonModel) -> Result<()> {
        if self.theta_b.len() != model.body_joint_count {
            return Err(Error::ModelMismatch(format!(
                "theta_b has {} rows, model expects {}",
                self.theta_b.len(),
                model.body_joint_count
            )));
        }
        if self.theta_h.len() != 2 * model.hand_joint_count() {
            return Err(Error::ModelMismatch(format!(
                "theta_h has {} rows, model expects {}",
                self.theta_h.len(),
                2 * model.hand_joint_count()
            )));
        }
        let finite = self
            .theta_b
            .iter()
            .chain(&self.theta_h)
            .flatten()
            .chain(&self.theta_f)
            .chain(&self.expr)
            .chain(&self.transl)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::ModelMismatch("non-finite motion entry".into()));
        }
        Ok(())
    }
}

/// A clip of motion states sharing one shape vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    pub fps: f64,
    pub shape: Vec<f64>,
    pub frames: Vec<MotionState>,
}

impl MotionSequence {
    pub fn rest(model: &SkeletonModel, frames: usize, fps: f64) -> Self {
        MotionSequence {
            fps,
            shape: vec![0.0; model.shape_dim],
            frames: vec![MotionState::rest(model); frames],
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn check(&self, model: &SkeletonModel) -> Result<()> {
        if !(self.fps > 0.0) {
            return Err(Error::ModelMismatch(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        if self.shape.len() != model.shape_dim {
            return Err(Error::ModelMismatch(format!(
                "shape has length {}, model expects {}",
                self.shape.len(),
                model.shape_dim
            )));
        }
        if self.shape.iter().any(|x| !x.is_finite()) {
            return Err(Error::ModelMismatch("non-finite shape entry".into()));
        }
        self.frames.iter().try_for_each(|f| f.check(model))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        io::read_json(path.as_ref())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_json(path.as_ref(), self)
    }

    /// Hand-only view of the clip.
    pub fn hand_subset(&self) -> HandMotionSequence {
        HandMotionSequence {
            fps: self.fps,
            shape: self.shape.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| HandState {
                    theta_h: f.theta_h.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub theta_h: Vec<[f64; 6]>,
}

/// Hand-only motion: per-frame hand rows plus the shared shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandMotionSequence {
    pub fps: f64,
    pub shape: Vec<f64>,
    pub frames: Vec<HandState>,
}

/// Flat packing of a clip's optimizable parameters: per frame all rotation
/// rows then the translation, followed by the shared shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub frames: usize,
    pub rows: usize,
    pub shape_dim: usize,
}

impl ParamLayout {
    pub fn new(model: &SkeletonModel, frames: usize) -> Self {
        ParamLayout {
            frames,
            rows: model.row_count(),
            shape_dim: model.shape_dim,
        }
    }

    pub fn frame_stride(&self) -> usize {
        self.rows * 6 + 3
    }

    pub fn frame_offset(&self, t: usize) -> usize {
        t * self.frame_stride()
    }

    pub fn row_offset(&self, t: usize, r: usize) -> usize {
        self.frame_offset(t) + r * 6
    }

    pub fn transl_offset(&self, t: usize) -> usize {
        self.frame_offset(t) + self.rows * 6
    }

    pub fn shape_offset(&self) -> usize {
        self.frames * self.frame_stride()
    }

    pub fn len(&self) -> usize {
        self.shape_offset() + self.shape_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pack(&self, seq: &MotionSequence) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        for f in &seq.frames {
            for r in 0..self.rows {
                x.extend_from_slice(f.row(r));
            }
            x.extend_from_slice(&f.transl);
        }
        x.extend_from_slice(&seq.shape);
        x
    }

    /// Writes `x` into a copy of `template`, keeping fps and expressions.
    pub fn unpack(&self, x: &[f64], template: &MotionSequence) -> MotionSequence {
        let mut seq = template.clone();
        for (t, f) in seq.frames.iter_mut().enumerate() {
            for r in 0..self.rows {
                let o = self.row_offset(t, r);
                f.row_mut(r).copy_from_slice(&x[o..o + 6]);
            }
            let o = self.transl_offset(t);
            f.transl.copy_from_slice(&x[o..o + 3]);
        }
        seq.shape.copy_from_slice(&x[self.shape_offset()..]);
        seq
    }
}
