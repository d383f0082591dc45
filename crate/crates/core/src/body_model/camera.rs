use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub const MIN_DEPTH: f64 = 1e-6;

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Image size, used only for sanity bounds and synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let cam = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width: None,
            height: None,
        };
        cam.check()?;
        Ok(cam)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cam: CameraIntrinsics = io::read_json(path.as_ref())?;
        cam.check()?;
        Ok(cam)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_json(path.as_ref(), self)
    }

    /// Image diagonal; falls back to twice the principal point.
    pub fn diagonal(&self) -> f64 {
        let w = self.width.unwrap_or(2.0 * self.cx);
        let h = self.height.unwrap_or(2.0 * self.cy);
        w.hypot(h)
    }

    /// Projects one point; `None` when it is not in front of the camera.
    pub fn project_point(&self, p: &Vector3<f64>) -> Option<[f64; 2]> {
        if !(p.z > MIN_DEPTH) {
            return None;
        }
        Some([self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy])
    }

    /// Pulls a pixel-space adjoint back to the 3D point.
    pub fn project_adjoint(&self, p: &Vector3<f64>, g: [f64; 2]) -> Vector3<f64> {
        let iz = 1.0 / p.z;
        let gx = g[0] * self.fx * iz;
        let gy = g[1] * self.fy * iz;
        Vector3::new(gx, gy, -(gx * p.x + gy * p.y) * iz)
    }
}

/// Projects a frame's points. Errors name the first offending joint.
pub fn project(points: &[Vector3<f64>], cam: &CameraIntrinsics) -> Result<Vec<[f64; 2]>> {
    project_frame(points, cam, 0)
}

pub(crate) fn project_frame(points: &[Vector3<f64>], cam: &CameraIntrinsics, frame: usize) -> Result<Vec<[f64; 2]>> {
    points
        .iter()
        .enumerate()
        .map(|(joint, p)| {
            cam.project_point(p).ok_or(Error::BehindCamera {
                frame,
                joint,
                depth: p.z,
            })
        })
        .collect()
}
