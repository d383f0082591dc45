use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamParams, AdamState};
use super::init::initialize;
use super::lbfgs::{Lbfgs, LbfgsParams, StepStatus};
use crate::body_model::{CameraIntrinsics, MotionSequence, ParamLayout, SkeletonModel};
use crate::error::{Error, Result};
use crate::keypoints::KeypointSequence;
use crate::objective::{BiomechanicalLimits, Objective, ObjectiveWeights, TermBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Lbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub steps: usize,
    pub optimize_shape: bool,
    pub w_body: f64,
    pub w_hand: f64,
    /// Overrides [`FitConfig::optimizer`] for this stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub total_steps: usize,
    pub stages: Vec<StageSpec>,
    pub optimizer: OptimizerKind,
    pub adam: AdamParams,
    pub lbfgs: LbfgsParams,
    /// A stage ends early once the gradient norm falls below this.
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let stage = |optimize_shape, w_hand| StageSpec {
            steps: 400,
            optimize_shape,
            w_body: 1.0,
            w_hand,
            optimizer: None,
        };
        FitConfig {
            total_steps: 2000,
            stages: vec![
                stage(true, 1.0),
                stage(true, 1.0),
                stage(true, 1.0),
                stage(false, 2.0),
                stage(false, 2.0),
            ],
            optimizer: OptimizerKind::Adam,
            adam: AdamParams::default(),
            lbfgs: LbfgsParams::default(),
            convergence_tol: 1e-6,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn check(&self) -> Result<()> {
        let sum: usize = self.stages.iter().map(|s| s.steps).sum();
        if sum != self.total_steps {
            return Err(Error::Config(format!(
                "stage steps sum to {sum}, total_steps is {}",
                self.total_steps
            )));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("at least one stage is required".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if !(s.w_body.is_finite() && s.w_body >= 0.0 && s.w_hand.is_finite() && s.w_hand >= 0.0) {
                return Err(Error::Config(format!("stage {} has an invalid group weight", i + 1)));
            }
        }
        if !(self.adam.lr > 0.0 && (0.0..1.0).contains(&self.adam.beta1) && (0.0..1.0).contains(&self.adam.beta2)) {
            return Err(Error::Config("Adam needs lr > 0 and betas in [0, 1)".into()));
        }
        if self.lbfgs.history == 0 {
            return Err(Error::Config("L-BFGS history must be positive".into()));
        }
        self.lbfgs.wolfe().check()?;
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Config("convergence_tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Every stage scaled to `steps` in total, keeping the proportions.
    /// The remainder goes to the last stages.
    pub fn with_total_steps(&self, steps: usize) -> Self {
        let mut out = self.clone();
        let n = out.stages.len();
        let old: usize = self.stages.iter().map(|s| s.steps).sum();
        let mut assigned = 0;
        for s in &mut out.stages {
            s.steps = if old == 0 { steps / n } else { s.steps * steps / old };
            assigned += s.steps;
        }
        let mut i = n;
        while assigned < steps {
            i = if i == 0 { n - 1 } else { i - 1 };
            out.stages[i].steps += 1;
            assigned += 1;
        }
        out.total_steps = steps;
        out
    }
}

/// Losses at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub total: f64,
    pub terms: TermBreakdown,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub optimizer: OptimizerKind,
    pub w_body: f64,
    pub w_hand: f64,
    pub optimize_shape: bool,
    pub planned_steps: usize,
    pub steps_run: usize,
    /// Ended before `planned_steps`: converged or the line search stalled.
    pub early_stop: bool,
    /// Losses at every iterate the stage started a step from, then at the
    /// final iterate.
    pub trace: Vec<StepRecord>,
    /// Shape after every step.
    pub shapes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub initial: StepRecord,
    pub final_record: StepRecord,
    pub frozen_shape: Option<Vec<f64>>,
    pub iterations: usize,
    pub motion: MotionSequence,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Element-wise mean of the recorded shape iterates.
pub fn freeze_shape_mean(trace: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = trace.first().ok_or(Error::NoTrace)?;
    let n = trace.len() as f64;
    let mut mean = vec![0.0; first.len()];
    for b in trace {
        if b.len() != mean.len() {
            return Err(Error::Shape(format!(
                "shape trace mixes lengths {} and {}",
                mean.len(),
                b.len()
            )));
        }
        for (m, v) in mean.iter_mut().zip(b) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

fn norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Staged fit of a motion sequence to fused, filled keypoints.
///
/// Stages run in order. While stages optimize the shape its per-step
/// iterates are recorded; at the first stage that does not, the shape is
/// frozen to their mean and stays constant from then on.
#[allow(clippy::too_many_arguments)]
pub fn fit_sequence(
    model: &SkeletonModel,
    cam: &CameraIntrinsics,
    keypoints: &KeypointSequence,
    weights: &ObjectiveWeights,
    limits: Option<&BiomechanicalLimits>,
    config: &FitConfig,
    init: Option<&MotionSequence>,
    fps: f64,
) -> Result<FitReport> {
    let start = Instant::now();
    config.check()?;
    keypoints.check()?;
    if keypoints.is_empty() {
        return Err(Error::EmptySequence);
    }
    let template = initialize(model, cam, keypoints, init, fps)?;
    let layout = ParamLayout::new(model, template.len());
    let mut x = layout.pack(&template);
    let mut obj = Objective::new(model, cam, Some(keypoints), template.len(), limits, weights.clone())?;
    let so = layout.shape_offset();

    let record = |obj: &Objective, x: &[f64], shape_free: bool| -> Result<(StepRecord, Vec<f64>)> {
        let e = obj.evaluate(x, shape_free)?;
        Ok((
            StepRecord {
                total: e.total,
                terms: e.terms,
                grad_norm: norm(&e.gradient),
            },
            e.gradient,
        ))
    };
    let initial = {
        let mut w = weights.clone();
        if let Some(s) = config.stages.first() {
            w.w_body = s.w_body;
            w.w_hand = s.w_hand;
        }
        obj.set_weights(w)?;
        record(&obj, &x, true)?.0
    };

    let mut stages = Vec::with_capacity(config.stages.len());
    let mut shape_trace: Vec<Vec<f64>> = Vec::new();
    let mut frozen: Option<Vec<f64>> = None;
    let mut iterations = 0;
    for (si, spec) in config.stages.iter().enumerate() {
        let stage_no = si + 1;
        let ctx = |step: usize| {
            move |e: Error| Error::Fit {
                stage: stage_no,
                step,
                source: Box::new(e),
            }
        };
        if !spec.optimize_shape && frozen.is_none() && !shape_trace.is_empty() {
            let mean = freeze_shape_mean(&shape_trace)?;
            x[so..].copy_from_slice(&mean);
            frozen = Some(mean);
        }
        let shape_free = spec.optimize_shape && frozen.is_none();
        let mut w = weights.clone();
        w.w_body = spec.w_body;
        w.w_hand = spec.w_hand;
        obj.set_weights(w)?;
        let kind = spec.optimizer.unwrap_or(config.optimizer);
        let mut report = StageReport {
            optimizer: kind,
            w_body: spec.w_body,
            w_hand: spec.w_hand,
            optimize_shape: shape_free,
            planned_steps: spec.steps,
            steps_run: 0,
            early_stop: false,
            trace: Vec::with_capacity(spec.steps + 1),
            shapes: Vec::with_capacity(spec.steps),
        };
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let e = obj.evaluate(x, shape_free)?;
            Ok((e.total, e.gradient))
        };
        let (rec, mut grad) = record(&obj, &x, shape_free).map_err(ctx(0))?;
        let mut fx = rec.total;
        report.trace.push(rec);
        let mut adam = AdamState::new(x.len());
        let mut lbfgs = Lbfgs::new(config.lbfgs);
        for step in 0..spec.steps {
            if norm(&grad) < config.convergence_tol {
                report.early_stop = true;
                log::info!("stage {stage_no}: converged after {step} steps");
                break;
            }
            match kind {
                OptimizerKind::Adam => {
                    adam_step(&mut x, &grad, &mut adam, &config.adam);
                    let (rec, g) = record(&obj, &x, shape_free).map_err(ctx(step + 1))?;
                    fx = rec.total;
                    grad = g;
                    report.trace.push(rec);
                }
                OptimizerKind::Lbfgs => {
                    let (status, _) = lbfgs.step(eval, &mut x, &mut fx, &mut grad).map_err(ctx(step + 1))?;
                    if status == StepStatus::Stalled {
                        report.early_stop = true;
                        log::info!("stage {stage_no}: line search stalled after {step} steps");
                        break;
                    }
                    let terms = obj.evaluate(&x, shape_free).map_err(ctx(step + 1))?.terms;
                    report.trace.push(StepRecord {
                        total: fx,
                        terms,
                        grad_norm: norm(&grad),
                    });
                }
            }
            report.steps_run += 1;
            report.shapes.push(x[so..].to_vec());
            if shape_free {
                shape_trace.push(x[so..].to_vec());
            }
        }
        iterations += report.steps_run;
        log::debug!("stage {stage_no}: {} steps, total {:.6e}", report.steps_run, fx);
        stages.push(report);
    }
    let final_record = record(&obj, &x, false)?.0;
    Ok(FitReport {
        seed: config.seed,
        stages,
        initial,
        final_record,
        frozen_shape: frozen,
        iterations,
        motion: layout.unpack(&x, &template),
        wall_time: start.elapsed(),
    })
}
