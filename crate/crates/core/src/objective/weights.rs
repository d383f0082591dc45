use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Influence weights of the fitting energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveWeights {
    #[serde(rename = "lambda_J")]
    pub lambda_j: f64,
    pub lambda_theta: f64,
    pub lambda_alpha: f64,
    pub lambda_beta: f64,
    pub lambda_smooth: f64,
    pub lambda_angle: f64,
    pub lambda_bl: f64,
    pub lambda_palm: f64,
    pub lambda_ja: f64,
    /// Reprojection weight of body and face keypoints.
    pub w_body: f64,
    /// Reprojection weight of hand keypoints.
    pub w_hand: f64,
    /// Geman-McClure scale in pixels; `None` gives plain squared error.
    pub robust_sigma: Option<f64>,
    /// Gain of the exponential elbow/knee bending prior.
    pub bend_gain: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            lambda_j: 1.0,
            lambda_theta: 1.0,
            lambda_alpha: 0.01,
            lambda_beta: 1.0,
            lambda_smooth: 10.0,
            lambda_angle: 10.0,
            lambda_bl: 1e6,
            lambda_palm: 1e5,
            lambda_ja: 1e5,
            w_body: 1.0,
            w_hand: 1.0,
            robust_sigma: Some(100.0),
            bend_gain: 1.0,
        }
    }
}

/// Individual energy terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Reprojection,
    PosePrior,
    Bending,
    ShapePrior,
    Smooth,
    Angle,
    BoneLength,
    Palm,
    JointAngle,
}

impl Term {
    pub const ALL: [Term; 9] = [
        Term::Reprojection,
        Term::PosePrior,
        Term::Bending,
        Term::ShapePrior,
        Term::Smooth,
        Term::Angle,
        Term::BoneLength,
        Term::Palm,
        Term::JointAngle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::Reprojection => "reprojection",
            Term::PosePrior => "pose_prior",
            Term::Bending => "bending",
            Term::ShapePrior => "shape_prior",
            Term::Smooth => "smooth",
            Term::Angle => "angle",
            Term::BoneLength => "bone_length",
            Term::Palm => "palm",
            Term::JointAngle => "joint_angle",
        }
    }
}

impl ObjectiveWeights {
    pub fn lambda(&self, term: Term) -> f64 {
        match term {
            Term::Reprojection => self.lambda_j,
            Term::PosePrior => self.lambda_theta,
            Term::Bending => self.lambda_alpha,
            Term::ShapePrior => self.lambda_beta,
            Term::Smooth => self.lambda_smooth,
            Term::Angle => self.lambda_angle,
            Term::BoneLength => self.lambda_bl,
            Term::Palm => self.lambda_palm,
            Term::JointAngle => self.lambda_ja,
        }
    }

    pub fn lambda_mut(&mut self, term: Term) -> &mut f64 {
        match term {
            Term::Reprojection => &mut self.lambda_j,
            Term::PosePrior => &mut self.lambda_theta,
            Term::Bending => &mut self.lambda_alpha,
            Term::ShapePrior => &mut self.lambda_beta,
            Term::Smooth => &mut self.lambda_smooth,
            Term::Angle => &mut self.lambda_angle,
            Term::BoneLength => &mut self.lambda_bl,
            Term::Palm => &mut self.lambda_palm,
            Term::JointAngle => &mut self.lambda_ja,
        }
    }

    /// Every lambda zero except `term`, which is 1.
    pub fn only(&self, term: Term) -> Self {
        let mut w = self.clone();
        for t in Term::ALL {
            *w.lambda_mut(t) = 0.0;
        }
        *w.lambda_mut(term) = 1.0;
        w
    }

    pub fn check(&self) -> Result<()> {
        let mut all: Vec<(&str, f64)> = Term::ALL.iter().map(|&t| (t.name(), self.lambda(t))).collect();
        all.push(("w_body", self.w_body));
        all.push(("w_hand", self.w_hand));
        all.push(("bend_gain", self.bend_gain));
        if let Some((name, v)) = all.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!(
                "weight {name} must be finite and nonnegative, got {v}"
            )));
        }
        if let Some(s) = self.robust_sigma {
            if !(s > 0.0) {
                return Err(Error::Config(format!("robust_sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Weighted contribution of every term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub reprojection: f64,
    pub pose_prior: f64,
    pub bending: f64,
    pub shape_prior: f64,
    pub smooth: f64,
    pub angle: f64,
    pub bone_length: f64,
    pub palm: f64,
    pub joint_angle: f64,
}

impl TermBreakdown {
    pub fn get(&self, term: Term) -> f64 {
        match term {
            Term::Reprojection => self.reprojection,
            Term::PosePrior => self.pose_prior,
            Term::Bending => self.bending,
            Term::ShapePrior => self.shape_prior,
            Term::Smooth => self.smooth,
            Term::Angle => self.angle,
            Term::BoneLength => self.bone_length,
            Term::Palm => self.palm,
            Term::JointAngle => self.joint_angle,
        }
    }

    pub(crate) fn get_mut(&mut self, term: Term) -> &mut f64 {
        match term {
            Term::Reprojection => &mut self.reprojection,
            Term::PosePrior => &mut self.pose_prior,
            Term::Bending => &mut self.bending,
            Term::ShapePrior => &mut self.shape_prior,
            Term::Smooth => &mut self.smooth,
            Term::Angle => &mut self.angle,
            Term::BoneLength => &mut self.bone_length,
            Term::Palm => &mut self.palm,
            Term::JointAngle => &mut self.joint_angle,
        }
    }

    pub(crate) fn accumulate(&mut self, other: &TermBreakdown) {
        for t in Term::ALL {
            *self.get_mut(t) += other.get(t);
        }
    }

    /// Sum in fixed term order.
    pub fn total(&self) -> f64 {
        Term::ALL.iter().fold(0.0, |acc, &t| acc + self.get(t))
    }

    /// Biomechanical part.
    pub fn bio(&self) -> f64 {
        self.bone_length + self.palm + self.joint_angle
    }
}
