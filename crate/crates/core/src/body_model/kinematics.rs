//! Forward kinematics down the joint tree and its reverse-mode adjoint.

use nalgebra::{Matrix3, Vector3};

use super::motion::MotionState;
use super::rotation::{pullback_6d, rot6d_to_matrix, rot6d_with_jacobian};
use super::skeleton::SkeletonModel;
use crate::error::{Error, Result};

/// Everything the objective needs from one frame of FK.
#[derive(Debug, Clone)]
pub struct FkFrame {
    pub local: Vec<Matrix3<f64>>,
    pub global: Vec<Matrix3<f64>>,
    /// Shape-adjusted offsets from each joint's parent.
    pub offsets: Vec<Vector3<f64>>,
    pub positions: Vec<Vector3<f64>>,
    /// `dR/dr` per rotation row, present only when requested.
    jacobians: Vec<[Matrix3<f64>; 6]>,
}

/// Adjoints flowing back into FK.
#[derive(Debug, Clone)]
pub struct FkAdjoint {
    pub positions: Vec<Vector3<f64>>,
    pub local: Vec<Matrix3<f64>>,
    pub offsets: Vec<Vector3<f64>>,
}

impl FkAdjoint {
    pub fn zeros(joints: usize) -> Self {
        FkAdjoint {
            positions: vec![Vector3::zeros(); joints],
            local: vec![Matrix3::zeros(); joints],
            offsets: vec![Vector3::zeros(); joints],
        }
    }
}

/// Gradient of one frame with respect to its rows, translation and the
/// shared shape.
#[derive(Debug, Clone)]
pub struct FrameGradient {
    pub rows: Vec<[f64; 6]>,
    pub transl: [f64; 3],
    pub shape: Vec<f64>,
}

fn check_dims(model: &SkeletonModel, state: &MotionState, shape: &[f64]) -> Result<()> {
    state.check(model)?;
    if shape.len() != model.shape_dim {
        return Err(Error::ModelMismatch(format!(
            "shape has length {}, model expects {}",
            shape.len(),
            model.shape_dim
        )));
    }
    Ok(())
}

impl FkFrame {
    pub fn compute(model: &SkeletonModel, state: &MotionState, shape: &[f64], with_jacobians: bool) -> Result<Self> {
        check_dims(model, state, shape)?;
        let rows: Vec<[f64; 6]> = (0..state.row_count()).map(|r| *state.row(r)).collect();
        Self::from_rows(model, &rows, state.transl, shape, with_jacobians)
    }

    /// FK from raw rotation rows (body, hands, jaw). Dimensions are trusted.
    pub fn from_rows(
        model: &SkeletonModel,
        rows: &[[f64; 6]],
        transl: [f64; 3],
        shape: &[f64],
        with_jacobians: bool,
    ) -> Result<Self> {
        let n = model.joint_count();
        let mut jacobians = Vec::new();
        let mut row_mats = Vec::with_capacity(rows.len());
        if with_jacobians {
            jacobians.reserve(rows.len());
            for r in rows {
                let (m, jac) = rot6d_with_jacobian(r)?;
                row_mats.push(m);
                jacobians.push(jac);
            }
        } else {
            for r in rows {
                row_mats.push(rot6d_to_matrix(r)?);
            }
        }
        let local: Vec<Matrix3<f64>> = (0..n)
            .map(|j| model.slot(j).map_or(Matrix3::identity(), |r| row_mats[r]))
            .collect();
        let offsets: Vec<_> = (0..n).map(|j| model.shaped_offset(j, shape)).collect();
        let mut global = Vec::with_capacity(n);
        let mut positions = Vec::with_capacity(n);
        let transl = Vector3::from(transl);
        for j in 0..n {
            match model.joints[j].parent {
                Some(p) => {
                    global.push(global[p] * local[j]);
                    positions.push(positions[p] + global[p] * offsets[j]);
                }
                None => {
                    global.push(local[j]);
                    positions.push(transl + offsets[j]);
                }
            }
        }
        Ok(FkFrame {
            local,
            global,
            offsets,
            positions,
            jacobians,
        })
    }

    /// Reverse sweep from leaves to root.
    pub fn backward(&self, model: &SkeletonModel, mut adj: FkAdjoint) -> FrameGradient {
        assert!(
            !self.jacobians.is_empty(),
            "FkFrame::backward needs a frame computed with jacobians"
        );
        let n = model.joint_count();
        let mut g_global = vec![Matrix3::zeros(); n];
        let mut g = FrameGradient {
            rows: vec![[0.0; 6]; self.jacobians.len()],
            transl: [0.0; 3],
            shape: vec![0.0; model.shape_dim],
        };
        for j in (0..n).rev() {
            let gp = adj.positions[j];
            let gg = g_global[j];
            match model.joints[j].parent {
                Some(p) => {
                    adj.positions[p] += gp;
                    let gp_parent = self.global[p];
                    g_global[p] += gp * self.offsets[j].transpose() + gg * self.local[j].transpose();
                    adj.offsets[j] += gp_parent.transpose() * gp;
                    adj.local[j] += gp_parent.transpose() * gg;
                }
                None => {
                    for a in 0..3 {
                        g.transl[a] += gp[a];
                    }
                    adj.offsets[j] += gp;
                    adj.local[j] += gg;
                }
            }
            let go = adj.offsets[j];
            for (k, row) in model.joints[j].shape_basis.iter().enumerate() {
                g.shape[k] += row[0] * go[0] + row[1] * go[1] + row[2] * go[2];
            }
            if let Some(r) = model.slot(j) {
                let pulled = pullback_6d(&self.jacobians[r], &adj.local[j]);
                for k in 0..6 {
                    g.rows[r][k] += pulled[k];
                }
            }
        }
        g
    }
}

/// 3D joint positions in meters.
pub fn forward_kinematics(model: &SkeletonModel, state: &MotionState, shape: &[f64]) -> Result<Vec<Vector3<f64>>> {
    Ok(FkFrame::compute(model, state, shape, false)?.positions)
}
