use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::line_search::{line_search_strong_wolfe, WolfeParams};
use crate::error::Result;

/// Pairs with `s'y` at or below this are not stored.
pub const CURVATURE_GUARD: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The last `capacity` curvature pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsHistory {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl LbfgsHistory {
    pub fn new(capacity: usize) -> Self {
        LbfgsHistory {
            capacity: capacity.max(1),
            pairs: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores `(s, y)` unless it fails the curvature guard. Returns whether
    /// the pair was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > CURVATURE_GUARD) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: `-H g` with the initial scaling `s'y / y'y` of
    /// the newest pair.
    pub fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// Search direction for `grad` from the current history.
pub fn lbfgs_step(history: &LbfgsHistory, grad: &[f64]) -> Vec<f64> {
    history.direction(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsParams {
    pub history: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_iters: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams {
            history: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_iters: 25,
        }
    }
}

impl LbfgsParams {
    pub fn wolfe(&self) -> WolfeParams {
        WolfeParams {
            c1: self.wolfe_c1,
            c2: self.wolfe_c2,
            max_iters: self.max_line_iters,
        }
    }
}

/// Bookkeeping for one accepted iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptedStep {
    pub alpha: f64,
    pub value: f64,
    /// Sufficient decrease held at the accepted point.
    pub armijo: bool,
    /// Strong curvature condition held at the accepted point.
    pub curvature: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Accepted,
    /// No decrease along the steepest-descent direction either.
    Stalled,
}

/// Incremental L-BFGS driver; the caller owns the iterate.
#[derive(Debug, Clone)]
pub struct Lbfgs {
    params: LbfgsParams,
    history: LbfgsHistory,
}

impl Lbfgs {
    pub fn new(params: LbfgsParams) -> Self {
        Lbfgs {
            params,
            history: LbfgsHistory::new(params.history),
        }
    }

    pub fn history(&self) -> &LbfgsHistory {
        &self.history
    }

    /// One iteration from `(x, fx, gx)`, which are replaced by the accepted
    /// point. On a failed search the history is dropped and steepest
    /// descent is tried once before reporting a stall.
    pub fn step<F>(
        &mut self,
        mut f: F,
        x: &mut Vec<f64>,
        fx: &mut f64,
        gx: &mut Vec<f64>,
    ) -> Result<(StepStatus, Option<AcceptedStep>)>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let wolfe = self.params.wolfe();
        for attempt in 0..2 {
            if attempt == 1 {
                if self.history.is_empty() {
                    break;
                }
                self.history.clear();
            }
            let d = self.history.direction(gx);
            let gnorm = dot(gx, gx).sqrt();
            let alpha0 = if self.history.is_empty() {
                (1.0 / gnorm).min(1.0)
            } else {
                1.0
            };
            let r = line_search_strong_wolfe(&mut f, x, *fx, gx, &d, alpha0, &wolfe)?;
            if r.alpha == 0.0 || !(r.value < *fx) {
                continue;
            }
            let slope0 = dot(gx, &d);
            let rec = AcceptedStep {
                alpha: r.alpha,
                value: r.value,
                armijo: r.value <= *fx + wolfe.c1 * r.alpha * slope0,
                curvature: dot(&r.gradient, &d).abs() <= -wolfe.c2 * slope0,
                evaluations: r.evaluations,
            };
            let s: Vec<f64> = d.iter().map(|v| r.alpha * v).collect();
            let y: Vec<f64> = r.gradient.iter().zip(gx.iter()).map(|(a, b)| a - b).collect();
            for (xi, si) in x.iter_mut().zip(&s) {
                *xi += si;
            }
            self.history.push(s, y);
            *fx = r.value;
            *gx = r.gradient;
            return Ok((StepStatus::Accepted, Some(rec)));
        }
        Ok((StepStatus::Stalled, None))
    }
}

/// Result of [`minimize_lbfgs`].
#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsRun {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub steps: Vec<AcceptedStep>,
    pub converged: bool,
}

/// Minimizes `f` from `x0` until the gradient norm drops below `tol`, the
/// search stalls, or `max_iters` iterations have run.
pub fn minimize_lbfgs<F>(mut f: F, x0: &[f64], params: &LbfgsParams, max_iters: usize, tol: f64) -> Result<LbfgsRun>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    params.wolfe().check()?;
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = f(&x)?;
    let mut opt = Lbfgs::new(*params);
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        if dot(&gx, &gx).sqrt() < tol {
            converged = true;
            break;
        }
        match opt.step(&mut f, &mut x, &mut fx, &mut gx)? {
            (StepStatus::Accepted, Some(rec)) => steps.push(rec),
            _ => break,
        }
    }
    converged |= dot(&gx, &gx).sqrt() < tol;
    Ok(LbfgsRun {
        x,
        value: fx,
        gradient: gx,
        iterations: steps.len(),
        steps,
        converged,
    })
}
